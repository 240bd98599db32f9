//! Object abstraction: grids become scenes of connected same-color objects
//! with derived attributes.

use serde::{Deserialize, Serialize};

use super::grid::{Color, Grid};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Abstraction {
    pub connectivity: Connectivity,
    pub background: Color,
}

impl Default for Abstraction {
    fn default() -> Self {
        Abstraction {
            connectivity: Connectivity::Four,
            background: Color::BLACK,
        }
    }
}

/// One painted cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Px {
    pub row: i32,
    pub col: i32,
    pub color: Color,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shape {
    Square,
    Enclosed,
    Other,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::Square => "SQUARE",
            Shape::Enclosed => "ENCLOSED",
            Shape::Other => "OTHER",
        }
    }
}

/// Numeric object attributes that support `MIN` / `MAX`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Attr {
    Size,
    Degree,
    Width,
    Height,
    Row,
    Column,
}

impl Attr {
    pub const ALL: [Attr; 6] = [Attr::Size, Attr::Degree, Attr::Width, Attr::Height, Attr::Row, Attr::Column];

    pub fn name(self) -> &'static str {
        match self {
            Attr::Size => "size",
            Attr::Degree => "degree",
            Attr::Width => "width",
            Attr::Height => "height",
            Attr::Row => "row",
            Attr::Column => "column",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SceneObject {
    pub id: usize,
    /// Sorted row-major.
    pub cells: Vec<Px>,
    /// Majority color; ties go to the smaller color code.
    pub color: Color,
    pub size: i32,
    pub width: i32,
    pub height: i32,
    pub row: i32,
    pub column: i32,
    /// Number of neighboring objects.
    pub degree: i32,
    pub shape: Shape,
}

impl SceneObject {
    pub fn attr(&self, a: Attr) -> i32 {
        match a {
            Attr::Size => self.size,
            Attr::Degree => self.degree,
            Attr::Width => self.width,
            Attr::Height => self.height,
            Attr::Row => self.row,
            Attr::Column => self.column,
        }
    }

    /// Doubled bounding-box center, `(row, col)`.
    pub fn center2(&self) -> (i32, i32) {
        (2 * self.row + self.height - 1, 2 * self.column + self.width - 1)
    }
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub width: i32,
    pub height: i32,
    pub background: Color,
    pub objects: Vec<SceneObject>,
    /// Object occupying each cell (last painted wins).
    owner: Vec<Option<u16>>,
    neighbors: Vec<Vec<bool>>,
    min: [i32; 6],
    max: [i32; 6],
}

impl Scene {
    /// Splits the non-background cells into connected same-color objects,
    /// numbered in row-major order of their first cell.
    pub fn abstract_grid(grid: &Grid, abs: &Abstraction) -> Scene {
        let (w, h) = (grid.width() as i32, grid.height() as i32);
        let mut seen = vec![false; (w * h) as usize];
        let mut parts = Vec::new();
        let steps: &[(i32, i32)] = match abs.connectivity {
            Connectivity::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
            Connectivity::Eight => &[(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)],
        };
        for r in 0..h {
            for c in 0..w {
                let color = grid.get(r, c).unwrap();
                if color == abs.background || seen[(r * w + c) as usize] {
                    continue;
                }
                let mut cells = Vec::new();
                let mut stack = vec![(r, c)];
                seen[(r * w + c) as usize] = true;
                while let Some((y, x)) = stack.pop() {
                    cells.push(Px { row: y, col: x, color });
                    for (dy, dx) in steps {
                        let (ny, nx) = (y + dy, x + dx);
                        if grid.get(ny, nx) == Some(color) && !seen[(ny * w + nx) as usize] {
                            seen[(ny * w + nx) as usize] = true;
                            stack.push((ny, nx));
                        }
                    }
                }
                parts.push(cells);
            }
        }
        Scene::from_objects(w, h, abs.background, parts)
    }

    /// Builds a scene from explicit cell lists, keeping their order as ids.
    /// Empty cell lists are dropped.
    pub fn from_objects(width: i32, height: i32, background: Color, parts: Vec<Vec<Px>>) -> Scene {
        let mut objects: Vec<SceneObject> = parts
            .into_iter()
            .filter(|p| !p.is_empty())
            .enumerate()
            .map(|(id, mut cells)| {
                cells.sort();
                cells.dedup_by_key(|p| (p.row, p.col));
                describe(id, cells)
            })
            .collect();
        let mut owner = vec![None; (width * height).max(0) as usize];
        for o in &objects {
            for p in &o.cells {
                if (0..height).contains(&p.row) && (0..width).contains(&p.col) {
                    owner[(p.row * width + p.col) as usize] = Some(o.id as u16);
                }
            }
        }
        let n = objects.len();
        let mut neighbors = vec![vec![false; n]; n];
        for o in &objects {
            for p in &o.cells {
                for (dy, dx) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                    let (mut y, mut x) = (p.row + dy, p.col + dx);
                    while (0..height).contains(&y) && (0..width).contains(&x) {
                        if let Some(k) = owner[(y * width + x) as usize] {
                            if k as usize != o.id {
                                neighbors[o.id][k as usize] = true;
                                neighbors[k as usize][o.id] = true;
                            }
                            break;
                        }
                        y += dy;
                        x += dx;
                    }
                }
            }
        }
        for o in &mut objects {
            o.degree = neighbors[o.id].iter().filter(|&&b| b).count() as i32;
        }
        let mut min = [i32::MAX; 6];
        let mut max = [i32::MIN; 6];
        for o in &objects {
            for (i, a) in Attr::ALL.iter().enumerate() {
                min[i] = min[i].min(o.attr(*a));
                max[i] = max[i].max(o.attr(*a));
            }
        }
        Scene {
            width,
            height,
            background,
            objects,
            owner,
            neighbors,
            min,
            max,
        }
    }

    pub fn is_neighbor(&self, a: usize, b: usize) -> bool {
        self.neighbors[a][b]
    }

    /// Object painted at a cell, if any.
    pub fn owner(&self, row: i32, col: i32) -> Option<usize> {
        if (0..self.height).contains(&row) && (0..self.width).contains(&col) {
            self.owner[(row * self.width + col) as usize].map(usize::from)
        } else {
            None
        }
    }

    pub fn in_bounds(&self, row: i32, col: i32) -> bool {
        (0..self.height).contains(&row) && (0..self.width).contains(&col)
    }

    /// Scene-wide extreme of an attribute; `None` for an empty scene.
    pub fn extreme(&self, a: Attr, max: bool) -> Option<i32> {
        if self.objects.is_empty() {
            return None;
        }
        let i = Attr::ALL.iter().position(|x| *x == a).unwrap();
        Some(if max { self.max[i] } else { self.min[i] })
    }

    /// Paints objects in id order onto a background canvas.
    pub fn render(&self) -> Grid {
        let mut g = Grid::filled(self.width as usize, self.height as usize, self.background);
        for o in &self.objects {
            for p in &o.cells {
                g.set(p.row, p.col, p.color);
            }
        }
        g
    }
}

fn describe(id: usize, cells: Vec<Px>) -> SceneObject {
    let rows = cells.iter().map(|p| p.row);
    let cols = cells.iter().map(|p| p.col);
    let (r0, r1) = (rows.clone().min().unwrap(), rows.max().unwrap());
    let (c0, c1) = (cols.clone().min().unwrap(), cols.max().unwrap());
    let (width, height) = (c1 - c0 + 1, r1 - r0 + 1);
    let mut counts = [0usize; 256];
    for p in &cells {
        counts[p.color.0 as usize] += 1;
    }
    let color = Color((0..256).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).unwrap() as u8);
    let size = cells.len() as i32;
    let shape = if width == height && size == width * height {
        Shape::Square
    } else if encloses(&cells, r0, c0, width, height) {
        Shape::Enclosed
    } else {
        Shape::Other
    };
    SceneObject {
        id,
        cells,
        color,
        size,
        width,
        height,
        row: r0,
        column: c0,
        degree: 0,
        shape,
    }
}

/// True when some non-object cell of the bounding box cannot reach the
/// box border through non-object cells.
fn encloses(cells: &[Px], r0: i32, c0: i32, w: i32, h: i32) -> bool {
    let idx = |r: i32, c: i32| ((r - r0) * w + (c - c0)) as usize;
    let mut filled = vec![false; (w * h) as usize];
    for p in cells {
        filled[idx(p.row, p.col)] = true;
    }
    let mut outside = vec![false; (w * h) as usize];
    let mut stack = Vec::new();
    for r in r0..r0 + h {
        for c in c0..c0 + w {
            let border = r == r0 || r == r0 + h - 1 || c == c0 || c == c0 + w - 1;
            if border && !filled[idx(r, c)] {
                outside[idx(r, c)] = true;
                stack.push((r, c));
            }
        }
    }
    while let Some((r, c)) = stack.pop() {
        for (dy, dx) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
            let (y, x) = (r + dy, c + dx);
            if y < r0 || y >= r0 + h || x < c0 || x >= c0 + w {
                continue;
            }
            let i = idx(y, x);
            if !filled[i] && !outside[i] {
                outside[i] = true;
                stack.push((y, x));
            }
        }
    }
    (0..filled.len()).any(|i| !filled[i] && !outside[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(s: &str) -> Grid {
        s.parse().unwrap()
    }

    #[test]
    fn single_pixel() {
        let s = Scene::abstract_grid(&grid("O O\nO R"), &Abstraction::default());
        assert_eq!(s.objects.len(), 1);
        assert_eq!(s.objects[0].size, 1);
        assert_eq!(s.objects[0].color, Color::from_letter('R').unwrap());
    }

    #[test]
    fn l_shape_next_to_pixel() {
        let g = grid(
            "O O O O O
             O X O O O
             O X O O O
             O X X R O
             O O O O O",
        );
        let s = Scene::abstract_grid(&g, &Abstraction::default());
        assert_eq!(s.objects.len(), 2);
        let red = s.objects.iter().find(|o| o.color.letter() == 'R').unwrap();
        assert_eq!(Some(red.size), s.extreme(Attr::Size, false));
        assert!(s.is_neighbor(0, 1));
        assert_eq!(s.objects[0].degree, 1);
        assert_eq!(s.render(), g);
    }

    #[test]
    fn connectivity_config() {
        let g = grid("R O\nO R");
        let four = Scene::abstract_grid(&g, &Abstraction::default());
        assert_eq!(four.objects.len(), 2);
        let eight = Scene::abstract_grid(
            &g,
            &Abstraction {
                connectivity: Connectivity::Eight,
                ..Abstraction::default()
            },
        );
        assert_eq!(eight.objects.len(), 1);
        assert_eq!(eight.render(), g);
    }

    #[test]
    fn shapes_and_line_of_sight() {
        let g = grid(
            "X X X O B
             X O X O O
             X X X O R",
        );
        let s = Scene::abstract_grid(&g, &Abstraction::default());
        assert_eq!(s.objects[0].shape, Shape::Enclosed);
        assert_eq!(s.objects[1].shape, Shape::Square);
        // the ring sees both pixels along rows 0 and 2
        assert_eq!(s.objects[0].degree, 2);
        assert!(s.is_neighbor(1, 2));
        assert!(s.extreme(Attr::Size, true) == Some(8));
        assert!(Scene::abstract_grid(&grid("O O"), &Abstraction::default()).extreme(Attr::Size, false).is_none());
    }
}
