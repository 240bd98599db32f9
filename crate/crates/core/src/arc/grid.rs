use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ArcError;

/// A cell color. Letters and names follow the usual ten-color palette.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Color(pub u8);

const PALETTE: [(char, &str); 10] = [
    ('O', "BLACK"),
    ('B', "BLUE"),
    ('R', "RED"),
    ('G', "GREEN"),
    ('Y', "YELLOW"),
    ('X', "GREY"),
    ('F', "FUCHSIA"),
    ('A', "ORANGE"),
    ('C', "CYAN"),
    ('W', "BROWN"),
];

impl Color {
    pub const BLACK: Color = Color(0);
    pub const GREY: Color = Color(5);

    pub fn all() -> impl Iterator<Item = Color> {
        (0..PALETTE.len() as u8).map(Color)
    }

    pub fn letter(self) -> char {
        PALETTE[self.0 as usize].0
    }

    pub fn name(self) -> &'static str {
        PALETTE[self.0 as usize].1
    }

    pub fn from_letter(c: char) -> Option<Color> {
        PALETTE.iter().position(|&(l, _)| l == c).map(|i| Color(i as u8))
    }

    pub fn from_name(name: &str) -> Option<Color> {
        PALETTE.iter().position(|&(_, n)| n == name).map(|i| Color(i as u8))
    }
}

impl TryFrom<String> for Color {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Color::from_letter(c),
            _ => Color::from_name(&s),
        }
        .ok_or_else(|| format!("unknown color `{s}`"))
    }
}

impl From<Color> for String {
    fn from(c: Color) -> String {
        c.letter().to_string()
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    width: usize,
    height: usize,
    cells: Vec<Color>,
}

impl Grid {
    pub fn filled(width: usize, height: usize, color: Color) -> Grid {
        Grid {
            width,
            height,
            cells: vec![color; width * height],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Color>>) -> Result<Grid, ArcError> {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        if height == 0 || width == 0 {
            return Err(ArcError::Grid("empty grid".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != width) {
            return Err(ArcError::Grid(format!("row {i} has {} cells, expected {width}", rows[i].len())));
        }
        Ok(Grid {
            width,
            height,
            cells: rows.into_iter().flatten().collect(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: i32, col: i32) -> Option<Color> {
        self.contains(row, col)
            .then(|| self.cells[row as usize * self.width + col as usize])
    }

    pub fn set(&mut self, row: i32, col: i32, color: Color) {
        if self.contains(row, col) {
            self.cells[row as usize * self.width + col as usize] = color;
        }
    }

    pub fn contains(&self, row: i32, col: i32) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.height && (col as usize) < self.width
    }
}

impl FromStr for Grid {
    type Err = ArcError;

    /// Rows of space-separated color letters.
    fn from_str(s: &str) -> Result<Grid, ArcError> {
        let rows = s
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(parse_row)
            .collect::<Result<Vec<_>, _>>()?;
        Grid::from_rows(rows)
    }
}

fn parse_row(line: &str) -> Result<Vec<Color>, ArcError> {
    line.split_whitespace()
        .map(|tok| {
            let mut cs = tok.chars();
            match (cs.next(), cs.next()) {
                (Some(c), None) => Color::from_letter(c),
                _ => None,
            }
            .ok_or_else(|| ArcError::Grid(format!("bad cell `{tok}`")))
        })
        .collect()
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.cells.chunks(self.width).enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let letters: Vec<String> = row.iter().map(|c| c.letter().to_string()).collect();
            write!(f, "{}", letters.join(" "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grid {}x{}\n{self}", self.width, self.height)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPair {
    pub input: Grid,
    pub output: Option<Grid>,
}

/// Training pairs plus test inputs (with outputs when known).
#[derive(Clone, Debug, PartialEq)]
pub struct ArcTask {
    pub name: String,
    pub train: Vec<(Grid, Grid)>,
    pub test: Vec<GridPair>,
}

impl ArcTask {
    /// Reads the text task format:
    ///
    /// ```text
    /// TRAIN
    /// INPUT
    /// O R
    /// OUTPUT
    /// O Y
    /// TEST
    /// INPUT
    /// ...
    /// ```
    ///
    /// `PAIR n` lines and `INPUT GRID:` spellings are accepted too; lines
    /// starting with `;` are comments.
    pub fn parse(name: &str, text: &str) -> Result<ArcTask, ArcError> {
        // (is_test, is_output, rows, line)
        let mut blocks: Vec<(bool, bool, Vec<Vec<Color>>, usize)> = Vec::new();
        let mut section: Option<bool> = None;
        let mut open = false;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with(';') {
                continue;
            }
            let word = line.trim_start_matches('#').trim().to_ascii_uppercase();
            if word.starts_with("TRAIN") || word.starts_with("TEST") {
                section = Some(word.starts_with("TEST"));
                open = false;
            } else if word.starts_with("INPUT") || word.starts_with("OUTPUT") {
                let is_test = section
                    .ok_or_else(|| ArcError::Task(format!("line {}: grid outside TRAIN/TEST", i + 1)))?;
                blocks.push((is_test, word.starts_with("OUTPUT"), Vec::new(), i + 1));
                open = true;
            } else if word.starts_with("PAIR") {
                open = false;
            } else {
                let row = parse_row(line).map_err(|e| ArcError::Task(format!("line {}: {e}", i + 1)))?;
                match blocks.last_mut() {
                    Some(b) if open => b.2.push(row),
                    _ => return Err(ArcError::Task(format!("line {}: grid row before INPUT/OUTPUT", i + 1))),
                }
            }
        }

        let mut train = Vec::new();
        let mut test = Vec::new();
        let mut it = blocks.into_iter().peekable();
        while let Some((is_test, is_output, rows, line)) = it.next() {
            let grid = |rows, line| {
                Grid::from_rows(rows).map_err(|e| ArcError::Task(format!("grid at line {line}: {e}")))
            };
            if is_output {
                return Err(ArcError::Task(format!("line {line}: output without input")));
            }
            let input = grid(rows, line)?;
            let output = match it.peek() {
                Some(&(t, true, _, _)) if t == is_test => {
                    let (_, _, rows, line) = it.next().unwrap();
                    Some(grid(rows, line)?)
                }
                _ => None,
            };
            match (is_test, output) {
                (false, Some(o)) => train.push((input, o)),
                (false, None) => {
                    return Err(ArcError::Task(format!("line {line}: training input without output")))
                }
                (true, output) => test.push(GridPair { input, output }),
            }
        }
        if train.is_empty() {
            return Err(ArcError::Task("no training pairs".into()));
        }
        Ok(ArcTask {
            name: name.to_string(),
            train,
            test,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn palette_round_trip() {
        for c in Color::all() {
            assert_eq!(Color::from_letter(c.letter()), Some(c));
            assert_eq!(Color::from_name(c.name()), Some(c));
        }
        assert_eq!(Color::from_letter('X'), Some(Color::GREY));
    }

    #[test]
    fn grid_text_round_trip() {
        let g: Grid = "O R\nX O\n".parse().unwrap();
        assert_eq!(g.width(), 2);
        assert_eq!(g.get(1, 0), Some(Color::GREY));
        assert_eq!(g.get(2, 0), None);
        assert_eq!(g.to_string().parse::<Grid>().unwrap(), g);
        assert!("O R\nO".parse::<Grid>().is_err());
        assert!("O Q".parse::<Grid>().is_err());
    }

    #[test]
    fn parses_task_sections() {
        let text = "; demo\nTRAIN\nPAIR 1\nINPUT GRID:\nO R\nOUTPUT GRID:\nO Y\nINPUT\nR\nOUTPUT\nY\nTEST\nINPUT\nR R\n";
        let t = ArcTask::parse("demo", text).unwrap();
        assert_eq!(t.train.len(), 2);
        assert_eq!(t.test.len(), 1);
        assert!(t.test[0].output.is_none());
        assert!(ArcTask::parse("x", "TEST\nINPUT\nO\n").is_err());
    }
}
