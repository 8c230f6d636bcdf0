//! Rectangular character grids.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A rows x cols matrix of single-character tiles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileGrid {
    rows: usize,
    cols: usize,
    cells: Vec<char>,
}

/// JSON form: `{"rows": R, "cols": C, "cells": ["row0", "row1", ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridJson {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<String>,
}

impl TileGrid {
    pub fn filled(rows: usize, cols: usize, fill: char) -> Self {
        TileGrid {
            rows,
            cols,
            cells: vec![fill; rows * cols],
        }
    }

    /// Builds a grid from rows of text. Returns the index of the first row
    /// whose length differs from the first row's.
    pub fn from_rows<S: AsRef<str>>(lines: &[S]) -> Result<Self, usize> {
        let cols = lines.first().map_or(0, |l| l.as_ref().chars().count());
        let mut cells = Vec::with_capacity(lines.len() * cols);
        for (i, line) in lines.iter().enumerate() {
            let before = cells.len();
            cells.extend(line.as_ref().chars());
            if cells.len() - before != cols {
                return Err(i);
            }
        }
        Ok(TileGrid {
            rows: lines.len(),
            cols,
            cells,
        })
    }

    /// Parses plain text, one row per line.
    pub fn parse(text: &str) -> Result<Self, usize> {
        let lines: Vec<&str> = text.lines().collect();
        TileGrid::from_rows(&lines)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> char {
        self.cells[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, tile: char) {
        self.cells[row * self.cols + col] = tile;
    }

    pub fn row(&self, row: usize) -> &[char] {
        &self.cells[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_string(&self, row: usize) -> String {
        self.row(row).iter().collect()
    }

    /// Returns a copy with `n` rows of `fill` prepended.
    pub fn padded_top(&self, n: usize, fill: char) -> TileGrid {
        let mut cells = vec![fill; n * self.cols];
        cells.extend_from_slice(&self.cells);
        TileGrid {
            rows: self.rows + n,
            cols: self.cols,
            cells,
        }
    }

    /// Copies `src` into this grid with its top-left corner at (`row`, `col`).
    pub fn blit(&mut self, src: &TileGrid, row: usize, col: usize) {
        for r in 0..src.rows {
            let dst = (row + r) * self.cols + col;
            self.cells[dst..dst + src.cols].copy_from_slice(src.row(r));
        }
    }

    /// One row per line, each terminated by `\n`.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.rows * (self.cols + 1));
        for r in 0..self.rows {
            out.extend(self.row(r));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> GridJson {
        GridJson {
            rows: self.rows,
            cols: self.cols,
            cells: (0..self.rows).map(|r| self.row_string(r)).collect(),
        }
    }
}

impl fmt::Display for TileGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
