//! The rule DSL: grammar, values and the interpreter.
//!
//! Programs are s-expressions:
//!
//! ```text
//! (do (rule (and (color_equals (color_of self) GREY)
//!                (and (is_neighbor self other) (size_equals (size_of other) MIN)))
//!           (update_color (color_of other))))
//! ```

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::grammar::{Grammar, GrammarBuilder, NtId, ParseError, ProdId, Program};

use super::grid::{Color, Grid};
use super::scene::{Abstraction, Attr, Px, Scene, Shape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dir(pub i8, pub i8);

impl Dir {
    pub const NAMED: [(&'static str, Dir); 8] = [
        ("UP", Dir(-1, 0)),
        ("DOWN", Dir(1, 0)),
        ("LEFT", Dir(0, -1)),
        ("RIGHT", Dir(0, 1)),
        ("UP_LEFT", Dir(-1, -1)),
        ("DOWN_LEFT", Dir(1, -1)),
        ("UP_RIGHT", Dir(-1, 1)),
        ("DOWN_RIGHT", Dir(1, 1)),
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AxisKind {
    Vertical,
    Horizontal,
    LeftDiagonal,
    RightDiagonal,
}

/// A reflection axis. `at` is a doubled grid coordinate (a column for
/// vertical axes, a row for horizontal ones); `None` means the object's own
/// bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Axis {
    pub kind: AxisKind,
    pub at: Option<i32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ArcValue {
    Undefined,
    Bool(bool),
    Num(i32),
    Obj(u16),
    Color(Color),
    Dir(Dir),
    Axis(Axis),
    Overlap(bool),
    Angle(u16),
    Shape(Shape),
    /// The transformed object's cells.
    Effect(Arc<[Px]>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransformKind {
    UpdateColor,
    Move,
    MoveMax,
    Extend,
    Rotate,
    FillRectangle,
    HollowRectangle,
    Mirror,
    AddBorder,
    Flip,
    NoOp,
}

/// What a base production means.
#[derive(Clone, Debug, PartialEq)]
pub enum ArcNode {
    Do,
    DoEmpty,
    RulesOne,
    RulesMore,
    Rule,
    TransformsOne,
    TransformsMore,
    And,
    Or,
    Not,
    Equals,
    IsNeighbor,
    Transform(TransformKind),
    SelfObj,
    OtherObj,
    ColorOf,
    ColorConst(Color),
    DirOf,
    DirConst(Dir),
    AxisOf,
    AxisConst(AxisKind),
    Overlap(bool),
    Angle(u16),
    AttrOf(Attr),
    AttrMin(Attr),
    AttrMax(Attr),
    Num(i32),
    ShapeOf,
    ShapeConst(Shape),
}

/// A fully evaluated transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TransformOp {
    UpdateColor(Color),
    Move(Dir),
    MoveMax(Dir),
    Extend(Dir, bool),
    Rotate(u16),
    FillRectangle(Color, bool),
    HollowRectangle(Color),
    Mirror(Axis),
    AddBorder(Color),
    Flip(Axis),
    NoOp,
}

/// Where an expression is evaluated: a scene, the focus object and the
/// bound `other` (absent in single-object scenes).
#[derive(Clone, Copy)]
pub struct Ctx<'a> {
    pub scene: &'a Scene,
    pub me: usize,
    pub other: Option<usize>,
}

/// The DSL instantiated for one task.
#[derive(Clone, Debug)]
pub struct ArcDsl {
    pub grammar: Arc<Grammar>,
    nodes: Vec<ArcNode>,
    pub program: NtId,
    pub filter: NtId,
    pub transform: NtId,
}

const ATTR_NT: [(Attr, &str); 6] = [
    (Attr::Size, "$Size"),
    (Attr::Degree, "$Degree"),
    (Attr::Width, "$Width"),
    (Attr::Height, "$Height"),
    (Attr::Row, "$Row"),
    (Attr::Column, "$Column"),
];

struct Def {
    b: GrammarBuilder,
    nodes: Vec<ArcNode>,
}

impl Def {
    fn rule(&mut self, lhs: &str, rhs: &[&str], op: Option<&str>, node: ArcNode) {
        self.b.rule(lhs, rhs, op);
        self.nodes.push(node);
    }

    fn op(&mut self, lhs: &str, name: &str, args: &[&str], node: ArcNode) {
        let mut rhs = vec!["(", name];
        rhs.extend_from_slice(args);
        rhs.push(")");
        self.rule(lhs, &rhs, Some(name), node);
    }
}

impl ArcDsl {
    /// `size_literals` become extra `$Size` constants.
    pub fn new(size_literals: &[i32]) -> ArcDsl {
        let mut d = Def { b: GrammarBuilder::new("$Program"), nodes: Vec::new() };
        d.rule("$Program", &["(", "do", "$Rules", ")"], Some("do"), ArcNode::Do);
        d.rule("$Program", &["(", "do", ")"], None, ArcNode::DoEmpty);
        d.rule("$Rules", &["$Rule"], None, ArcNode::RulesOne);
        d.rule("$Rules", &["$Rule", "$Rules"], None, ArcNode::RulesMore);
        d.rule("$Rule", &["(", "rule", "$Filter", "$Transforms", ")"], Some("rule"), ArcNode::Rule);
        d.rule("$Transforms", &["$Transform"], None, ArcNode::TransformsOne);
        d.rule("$Transforms", &["$Transform", "$Transforms"], None, ArcNode::TransformsMore);

        d.op("$Filter", "and", &["$Filter", "$Filter"], ArcNode::And);
        d.op("$Filter", "or", &["$Filter", "$Filter"], ArcNode::Or);
        d.op("$Filter", "not", &["$Filter"], ArcNode::Not);
        d.op("$Filter", "color_equals", &["$Color", "$Color"], ArcNode::Equals);
        for (a, nt) in ATTR_NT {
            let name = format!("{}_equals", a.name());
            d.op("$Filter", &name, &[nt, nt], ArcNode::Equals);
            if a == Attr::Height {
                d.op("$Filter", "shape_equals", &["$Shape", "$Shape"], ArcNode::Equals);
            }
        }
        d.op("$Filter", "is_neighbor", &["$Obj", "$Obj"], ArcNode::IsNeighbor);

        use TransformKind as T;
        let transforms: [(&str, &[&str], T); 10] = [
            ("update_color", &["$Color"], T::UpdateColor),
            ("move", &["$Dir"], T::Move),
            ("move_max", &["$Dir"], T::MoveMax),
            ("extend", &["$Dir", "$Overlap"], T::Extend),
            ("rotate", &["$Angle"], T::Rotate),
            ("fill_rectangle", &["$Color", "$Overlap"], T::FillRectangle),
            ("hollow_rectangle", &["$Color"], T::HollowRectangle),
            ("mirror", &["$Axis"], T::Mirror),
            ("add_border", &["$Color"], T::AddBorder),
            ("flip", &["$Axis"], T::Flip),
        ];
        for (name, args, kind) in transforms {
            d.op("$Transform", name, args, ArcNode::Transform(kind));
        }
        d.rule("$Transform", &["NoOp"], None, ArcNode::Transform(T::NoOp));

        d.rule("$Obj", &["self"], None, ArcNode::SelfObj);
        d.rule("$Obj", &["other"], None, ArcNode::OtherObj);

        d.op("$Color", "color_of", &["$Obj"], ArcNode::ColorOf);
        for c in Color::all() {
            d.rule("$Color", &[c.name()], None, ArcNode::ColorConst(c));
        }
        d.op("$Dir", "dir_of", &["$Obj"], ArcNode::DirOf);
        for (name, dir) in Dir::NAMED {
            d.rule("$Dir", &[name], None, ArcNode::DirConst(dir));
        }
        d.op("$Axis", "axis_of", &["$Obj"], ArcNode::AxisOf);
        for (name, k) in [
            ("VERTICAL", AxisKind::Vertical),
            ("HORIZONTAL", AxisKind::Horizontal),
            ("LEFT_DIAGONAL", AxisKind::LeftDiagonal),
            ("RIGHT_DIAGONAL", AxisKind::RightDiagonal),
        ] {
            d.rule("$Axis", &[name], None, ArcNode::AxisConst(k));
        }
        d.rule("$Overlap", &["TRUE"], None, ArcNode::Overlap(true));
        d.rule("$Overlap", &["FALSE"], None, ArcNode::Overlap(false));
        for a in [90u16, 180, 270] {
            d.rule("$Angle", &[&a.to_string()], None, ArcNode::Angle(a));
        }

        let literals: BTreeSet<i32> = size_literals
            .iter()
            .copied()
            .filter(|n| *n > 0 && ![90, 180, 270].contains(n))
            .collect();
        for (a, nt) in ATTR_NT {
            let of = format!("{}_of", a.name());
            d.op(nt, &of, &["$Obj"], ArcNode::AttrOf(a));
            d.rule(nt, &["MIN"], None, ArcNode::AttrMin(a));
            d.rule(nt, &["MAX"], None, ArcNode::AttrMax(a));
            if a == Attr::Size {
                for n in &literals {
                    d.rule(nt, &[&n.to_string()], None, ArcNode::Num(*n));
                }
            }
        }
        d.op("$Shape", "shape_of", &["$Obj"], ArcNode::ShapeOf);
        d.rule("$Shape", &["SQUARE"], None, ArcNode::ShapeConst(Shape::Square));
        d.rule("$Shape", &["ENCLOSED"], None, ArcNode::ShapeConst(Shape::Enclosed));

        let nodes = d.nodes;
        let grammar = d.b.build().expect("the rule DSL grammar is well formed");
        let nt = |n: &str| grammar.nonterminal(n).unwrap();
        ArcDsl {
            program: nt("$Program"),
            filter: nt("$Filter"),
            transform: nt("$Transform"),
            grammar: Arc::new(grammar),
            nodes,
        }
    }

    /// Size constants taken from every object seen in the training grids.
    pub fn for_task(task: &super::ArcTask, abs: &Abstraction) -> ArcDsl {
        let mut sizes = BTreeSet::new();
        for (i, o) in &task.train {
            for g in [i, o] {
                sizes.extend(Scene::abstract_grid(g, abs).objects.iter().map(|o| o.size));
            }
        }
        ArcDsl::new(&sizes.into_iter().collect::<Vec<_>>())
    }

    pub fn node(&self, prod: ProdId) -> &ArcNode {
        &self.nodes[prod.index()]
    }

    pub fn parse(&self, text: &str) -> Result<Program, ParseError> {
        self.grammar.parse(text)
    }

    pub fn render(&self, program: &Program) -> String {
        program.render(&self.grammar)
    }

    /// Evaluates a sub-expression (filter, transform or attribute).
    pub fn eval_expr(&self, program: &Program, ctx: Ctx<'_>) -> ArcValue {
        let kids: Vec<ArcValue> = program
            .children()
            .iter()
            .map(|c| self.eval_expr(c, ctx))
            .collect();
        let refs: Vec<&ArcValue> = kids.iter().collect();
        eval_node(self.node(program.production()), ctx, &refs)
    }

    /// Runs a whole program on a grid; `None` when some rule is ambiguous.
    pub fn eval(&self, program: &Program, grid: &Grid, abs: &Abstraction) -> Option<Grid> {
        let mut rules = Vec::new();
        self.collect_rules(program, &mut rules)?;
        let mut scene = Scene::abstract_grid(grid, abs);
        for (filter, transforms) in rules {
            scene = self.apply_rule(&scene, filter, &transforms)?;
        }
        Some(scene.render())
    }

    fn collect_rules<'p>(&self, p: &'p Program, out: &mut Vec<(&'p Program, Vec<&'p Program>)>) -> Option<()> {
        match self.node(p.production()) {
            ArcNode::Do | ArcNode::RulesMore => {
                for c in p.children() {
                    self.collect_rules(c, out)?;
                }
            }
            ArcNode::DoEmpty => {}
            ArcNode::RulesOne => self.collect_rules(&p.children()[0], out)?,
            ArcNode::Rule => {
                let mut ts = Vec::new();
                let mut t = &p.children()[1];
                loop {
                    match self.node(t.production()) {
                        ArcNode::TransformsMore => {
                            ts.push(&*t.children()[0]);
                            t = &t.children()[1];
                        }
                        ArcNode::TransformsOne => {
                            ts.push(&*t.children()[0]);
                            break;
                        }
                        _ => return None,
                    }
                }
                out.push((&p.children()[0], ts));
            }
            _ => return None,
        }
        Some(())
    }

    /// Applies one rule to every object at once. Changed objects are painted
    /// over unchanged ones.
    fn apply_rule(&self, scene: &Scene, filter: &Program, transforms: &[&Program]) -> Option<Scene> {
        let n = scene.objects.len();
        let mut changed: Vec<Option<Vec<Px>>> = vec![None; n];
        for me in 0..n {
            let mut effect: Option<Vec<Px>> = None;
            for other in others(n, me) {
                let ctx = Ctx { scene, me, other };
                if self.eval_expr(filter, ctx) != ArcValue::Bool(true) {
                    continue;
                }
                let mut cells = scene.objects[me].cells.clone();
                for t in transforms {
                    let op = self.transform_op(t, ctx)?;
                    cells = apply_transform(op, ctx, &cells);
                }
                match &effect {
                    Some(e) if *e != cells => return None,
                    _ => effect = Some(cells),
                }
            }
            changed[me] = effect;
        }
        let mut parts: Vec<Vec<Px>> = Vec::with_capacity(n);
        for (o, c) in scene.objects.iter().zip(&changed) {
            if c.is_none() {
                parts.push(o.cells.clone());
            }
        }
        parts.extend(changed.into_iter().flatten());
        let parts = parts
            .into_iter()
            .map(|cells| cells.into_iter().filter(|p| scene.in_bounds(p.row, p.col)).collect())
            .collect();
        Some(Scene::from_objects(scene.width, scene.height, scene.background, parts))
    }

    fn transform_op(&self, t: &Program, ctx: Ctx<'_>) -> Option<TransformOp> {
        let ArcNode::Transform(kind) = self.node(t.production()) else {
            return None;
        };
        let args: Vec<ArcValue> = t.children().iter().map(|c| self.eval_expr(c, ctx)).collect();
        let refs: Vec<&ArcValue> = args.iter().collect();
        transform_op(*kind, &refs)
    }
}

/// Candidate bindings of `other` for a focus object.
pub fn others(n: usize, me: usize) -> impl Iterator<Item = Option<usize>> {
    let single = n == 1;
    (0..n)
        .filter(move |&o| o != me)
        .map(Some)
        .chain(single.then_some(None))
}

fn sign(v: i32) -> i8 {
    v.signum() as i8
}

/// Meaning of one node given its children's values. Undefined children make
/// the result undefined.
pub fn eval_node(node: &ArcNode, ctx: Ctx<'_>, args: &[&ArcValue]) -> ArcValue {
    use ArcValue as V;
    if args.iter().any(|a| **a == V::Undefined) {
        return V::Undefined;
    }
    let obj = |v: &ArcValue| match v {
        V::Obj(i) => ctx.scene.objects.get(*i as usize),
        _ => None,
    };
    match node {
        ArcNode::And => match (args[0], args[1]) {
            (V::Bool(a), V::Bool(b)) => V::Bool(*a && *b),
            _ => V::Undefined,
        },
        ArcNode::Or => match (args[0], args[1]) {
            (V::Bool(a), V::Bool(b)) => V::Bool(*a || *b),
            _ => V::Undefined,
        },
        ArcNode::Not => match args[0] {
            V::Bool(a) => V::Bool(!a),
            _ => V::Undefined,
        },
        ArcNode::Equals => V::Bool(args[0] == args[1]),
        ArcNode::IsNeighbor => match (args[0], args[1]) {
            (V::Obj(a), V::Obj(b)) => V::Bool(ctx.scene.is_neighbor(*a as usize, *b as usize)),
            _ => V::Undefined,
        },
        ArcNode::Transform(kind) => match transform_op(*kind, args) {
            Some(op) => {
                let cells = &ctx.scene.objects[ctx.me].cells;
                V::Effect(apply_transform(op, ctx, cells).into())
            }
            None => V::Undefined,
        },
        ArcNode::SelfObj => V::Obj(ctx.me as u16),
        ArcNode::OtherObj => ctx.other.map_or(V::Undefined, |o| V::Obj(o as u16)),
        ArcNode::ColorOf => obj(args[0]).map_or(V::Undefined, |o| V::Color(o.color)),
        ArcNode::ColorConst(c) => V::Color(*c),
        ArcNode::DirOf => match args[0] {
            V::Obj(o) if *o as usize != ctx.me => {
                let (a, b) = (&ctx.scene.objects[ctx.me], &ctx.scene.objects[*o as usize]);
                let ((ar, ac), (br, bc)) = (a.center2(), b.center2());
                match (sign(br - ar), sign(bc - ac)) {
                    (0, 0) => V::Undefined,
                    (r, c) => V::Dir(Dir(r, c)),
                }
            }
            _ => V::Undefined,
        },
        ArcNode::DirConst(d) => V::Dir(*d),
        ArcNode::AxisOf => match args[0] {
            V::Obj(o) if *o as usize != ctx.me => {
                let (a, b) = (&ctx.scene.objects[ctx.me], &ctx.scene.objects[*o as usize]);
                let ((ar, ac), (br, bc)) = (a.center2(), b.center2());
                if (bc - ac).abs() >= (br - ar).abs() {
                    V::Axis(Axis { kind: AxisKind::Vertical, at: Some(bc) })
                } else {
                    V::Axis(Axis { kind: AxisKind::Horizontal, at: Some(br) })
                }
            }
            _ => V::Undefined,
        },
        ArcNode::AxisConst(k) => V::Axis(Axis { kind: *k, at: None }),
        ArcNode::Overlap(b) => V::Overlap(*b),
        ArcNode::Angle(a) => V::Angle(*a),
        ArcNode::AttrOf(a) => obj(args[0]).map_or(V::Undefined, |o| V::Num(o.attr(*a))),
        ArcNode::AttrMin(a) => ctx.scene.extreme(*a, false).map_or(V::Undefined, V::Num),
        ArcNode::AttrMax(a) => ctx.scene.extreme(*a, true).map_or(V::Undefined, V::Num),
        ArcNode::Num(n) => V::Num(*n),
        ArcNode::ShapeOf => obj(args[0]).map_or(V::Undefined, |o| V::Shape(o.shape)),
        ArcNode::ShapeConst(s) => V::Shape(*s),
        ArcNode::Do
        | ArcNode::DoEmpty
        | ArcNode::RulesOne
        | ArcNode::RulesMore
        | ArcNode::Rule
        | ArcNode::TransformsOne
        | ArcNode::TransformsMore => V::Undefined,
    }
}

pub fn transform_op(kind: TransformKind, args: &[&ArcValue]) -> Option<TransformOp> {
    use ArcValue as V;
    use TransformKind as K;
    Some(match (kind, args) {
        (K::UpdateColor, [V::Color(c)]) => TransformOp::UpdateColor(*c),
        (K::Move, [V::Dir(d)]) => TransformOp::Move(*d),
        (K::MoveMax, [V::Dir(d)]) => TransformOp::MoveMax(*d),
        (K::Extend, [V::Dir(d), V::Overlap(o)]) => TransformOp::Extend(*d, *o),
        (K::Rotate, [V::Angle(a)]) => TransformOp::Rotate(*a),
        (K::FillRectangle, [V::Color(c), V::Overlap(o)]) => TransformOp::FillRectangle(*c, *o),
        (K::HollowRectangle, [V::Color(c)]) => TransformOp::HollowRectangle(*c),
        (K::Mirror, [V::Axis(a)]) => TransformOp::Mirror(*a),
        (K::AddBorder, [V::Color(c)]) => TransformOp::AddBorder(*c),
        (K::Flip, [V::Axis(a)]) => TransformOp::Flip(*a),
        (K::NoOp, []) => TransformOp::NoOp,
        _ => return None,
    })
}

fn bbox(cells: &[Px]) -> (i32, i32, i32, i32) {
    let r0 = cells.iter().map(|p| p.row).min().unwrap_or(0);
    let r1 = cells.iter().map(|p| p.row).max().unwrap_or(-1);
    let c0 = cells.iter().map(|p| p.col).min().unwrap_or(0);
    let c1 = cells.iter().map(|p| p.col).max().unwrap_or(-1);
    (r0, c0, r1, c1)
}

/// Transforms the cells of the focus object. Cells leaving the grid are
/// clipped; the result is sorted with one color per position, earlier
/// entries winning.
pub fn apply_transform(op: TransformOp, ctx: Ctx<'_>, cells: &[Px]) -> Vec<Px> {
    let scene = ctx.scene;
    let mine: std::collections::HashSet<(i32, i32)> = cells.iter().map(|p| (p.row, p.col)).collect();
    let blocked = |r: i32, c: i32| scene.owner(r, c).is_some_and(|o| o != ctx.me) && !mine.contains(&(r, c));
    let (r0, c0, r1, c1) = bbox(cells);
    let shift = |d: Dir, k: i32| -> Vec<Px> {
        cells
            .iter()
            .map(|p| Px {
                row: p.row + d.0 as i32 * k,
                col: p.col + d.1 as i32 * k,
                color: p.color,
            })
            .collect()
    };
    let reflect = |axis: Axis, p: &Px| -> Px {
        let (row, col) = match (axis.kind, axis.at) {
            (AxisKind::Vertical, Some(a)) => (p.row, a - p.col),
            (AxisKind::Vertical, None) => (p.row, c0 + c1 - p.col),
            (AxisKind::Horizontal, Some(a)) => (a - p.row, p.col),
            (AxisKind::Horizontal, None) => (r0 + r1 - p.row, p.col),
            (AxisKind::LeftDiagonal, _) => (r0 + (p.col - c0), c0 + (p.row - r0)),
            (AxisKind::RightDiagonal, _) => (r0 + (c1 - p.col), c0 + (r1 - p.row)),
        };
        Px { row, col, color: p.color }
    };
    let mut out: Vec<Px> = match op {
        TransformOp::NoOp => cells.to_vec(),
        TransformOp::UpdateColor(c) => cells.iter().map(|p| Px { color: c, ..*p }).collect(),
        TransformOp::Move(d) => shift(d, 1),
        TransformOp::MoveMax(d) => {
            let limit = scene.width.max(scene.height);
            let mut k = 0;
            while k < limit {
                let next = shift(d, k + 1);
                if next.iter().all(|p| scene.in_bounds(p.row, p.col) && !blocked(p.row, p.col)) {
                    k += 1;
                } else {
                    break;
                }
            }
            shift(d, k)
        }
        TransformOp::Extend(d, overlap) => {
            let mut v = cells.to_vec();
            for p in cells {
                let (mut r, mut c) = (p.row + d.0 as i32, p.col + d.1 as i32);
                while scene.in_bounds(r, c) && !mine.contains(&(r, c)) {
                    if !overlap && blocked(r, c) {
                        break;
                    }
                    v.push(Px { row: r, col: c, color: p.color });
                    r += d.0 as i32;
                    c += d.1 as i32;
                }
            }
            v
        }
        TransformOp::Rotate(a) => {
            let (h, w) = (r1 - r0 + 1, c1 - c0 + 1);
            cells
                .iter()
                .map(|p| {
                    let (dr, dc) = (p.row - r0, p.col - c0);
                    let (row, col) = match a {
                        90 => (r0 + dc, c0 + (h - 1 - dr)),
                        180 => (r0 + (h - 1 - dr), c0 + (w - 1 - dc)),
                        _ => (r0 + (w - 1 - dc), c0 + dr),
                    };
                    Px { row, col, color: p.color }
                })
                .collect()
        }
        TransformOp::FillRectangle(color, overlap) => {
            let mut v = cells.to_vec();
            for r in r0..=r1 {
                for c in c0..=c1 {
                    if !mine.contains(&(r, c)) && (overlap || !blocked(r, c)) {
                        v.push(Px { row: r, col: c, color });
                    }
                }
            }
            v
        }
        TransformOp::HollowRectangle(color) => {
            let mut v: Vec<Px> = cells
                .iter()
                .map(|p| {
                    let interior = p.row > r0 && p.row < r1 && p.col > c0 && p.col < c1;
                    if interior {
                        Px { color, ..*p }
                    } else {
                        *p
                    }
                })
                .collect();
            for r in r0 + 1..r1 {
                for c in c0 + 1..c1 {
                    if !mine.contains(&(r, c)) && !blocked(r, c) {
                        v.push(Px { row: r, col: c, color });
                    }
                }
            }
            v
        }
        TransformOp::Mirror(axis) => {
            let axis = match (axis.kind, axis.at) {
                // a bare axis mirrors onto the far side of the bounding box
                (AxisKind::Vertical, None) => Axis { at: Some(2 * c1 + 1), ..axis },
                (AxisKind::Horizontal, None) => Axis { at: Some(2 * r1 + 1), ..axis },
                _ => axis,
            };
            let mut v = cells.to_vec();
            v.extend(cells.iter().map(|p| reflect(axis, p)));
            v
        }
        TransformOp::Flip(axis) => cells.iter().map(|p| reflect(axis, p)).collect(),
        TransformOp::AddBorder(color) => {
            let mut v = cells.to_vec();
            for p in cells {
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        let (r, c) = (p.row + dr, p.col + dc);
                        if !mine.contains(&(r, c)) && !blocked(r, c) {
                            v.push(Px { row: r, col: c, color });
                        }
                    }
                }
            }
            v
        }
    };
    out.retain(|p| scene.in_bounds(p.row, p.col));
    // keep the first color written to each position
    let mut seen = std::collections::HashSet::new();
    out.retain(|p| seen.insert((p.row, p.col)));
    out.sort();
    out
}
