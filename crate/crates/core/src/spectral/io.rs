use std::io::{self, BufRead, Read, Write};

use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;

use super::grid::{Frame, Grid, ProfileState, WaveState};
use super::SpectralError;

/// Header length of the binary dump, in f64 words.
pub const HEADER_WORDS: usize = 8;

/// CSV lines `x1[,x2,x3],re,im` in row-major order.
pub fn write_field_csv<W: Write>(state: &WaveState, mut w: W) -> io::Result<()> {
    let c = state.grid.coords();
    write_csv(&c, "x", &state.values, state.grid.n, &mut w)
}

/// CSV lines `xi1[,xi2,xi3],re,im` over increasing frequencies.
pub fn write_profile_csv<W: Write>(profile: &ProfileState, mut w: W) -> io::Result<()> {
    let c = profile.xi();
    write_csv(&c, "xi", &profile.values, profile.grid.n, &mut w)
}

fn write_csv<W: Write>(c: &[f64], name: &str, values: &ArrayD<Complex64>, n: usize, w: &mut W) -> io::Result<()> {
    let cols: Vec<String> = (1..=n).map(|a| if n == 1 { name.to_string() } else { format!("{name}{a}") }).collect();
    writeln!(w, "{},re,im", cols.join(","))?;
    for (idx, v) in values.indexed_iter() {
        for a in 0..n {
            write!(w, "{:.17e},", c[idx[a]])?;
        }
        writeln!(w, "{:.17e},{:.17e}", v.re, v.im)?;
    }
    Ok(())
}

/// Little-endian f64 words: dims, points, L, scale, frame tag, t, y1, dy1,
/// then (re, im) pairs in row-major order.
pub fn write_field_bin<W: Write>(state: &WaveState, mut w: W) -> io::Result<()> {
    let (y1, dy1) = match state.frame {
        Frame::Original => (1.0, 0.0),
        Frame::Lens { y1, dy1 } => (y1, dy1),
    };
    let g = &state.grid;
    let header = [
        g.n as f64,
        g.points as f64,
        g.half_width,
        g.scale,
        state.frame.tag() as f64,
        state.t,
        y1,
        dy1,
    ];
    for h in header {
        w.write_all(&h.to_le_bytes())?;
    }
    for v in state.values.iter() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()
}

pub fn read_field_bin<R: Read>(mut r: R) -> Result<WaveState, SpectralError> {
    let mut word = [0u8; 8];
    let mut next = |r: &mut R| -> Result<f64, SpectralError> {
        r.read_exact(&mut word).map_err(|e| SpectralError::Format(e.to_string()))?;
        Ok(f64::from_le_bytes(word))
    };
    let mut header = [0.0; HEADER_WORDS];
    for h in header.iter_mut() {
        *h = next(&mut r)?;
    }
    let [dims, points, l, scale, tag, t, y1, dy1] = header;
    if dims.fract() != 0.0 || points.fract() != 0.0 || dims < 1.0 || points < 1.0 {
        return Err(SpectralError::Format(format!("bad header dims = {dims}, points = {points}")));
    }
    let grid = Grid {
        n: dims as usize,
        points: points as usize,
        half_width: l,
        scale,
    };
    grid.validate()?;
    let frame = match tag as u64 {
        0 => Frame::Original,
        1 => Frame::Lens { y1, dy1 },
        other => return Err(SpectralError::Format(format!("unknown frame tag {other}"))),
    };
    let mut data = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = next(&mut r)?;
        let im = next(&mut r)?;
        data.push(Complex64::new(re, im));
    }
    let values = ArrayD::from_shape_vec(IxDyn(&grid.shape()), data)
        .map_err(|e| SpectralError::Format(e.to_string()))?;
    Ok(WaveState { grid, values, frame, t })
}

/// Read a 1-D field from CSV lines `x,re,im` (header optional) onto `grid`.
pub fn read_field_csv<R: BufRead>(r: R, grid: Grid) -> Result<WaveState, SpectralError> {
    let mut data = Vec::with_capacity(grid.len());
    for line in r.lines() {
        let line = line.map_err(|e| SpectralError::Format(e.to_string()))?;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            continue;
        }
        let k = fields.len();
        let (Ok(re), Ok(im)) = (fields[k - 2].parse::<f64>(), fields[k - 1].parse::<f64>()) else {
            continue;
        };
        data.push(Complex64::new(re, im));
    }
    if data.len() != grid.len() {
        return Err(SpectralError::ShapeMismatch {
            expected: grid.shape(),
            found: vec![data.len()],
        });
    }
    let values = ArrayD::from_shape_vec(IxDyn(&grid.shape()), data)
        .map_err(|e| SpectralError::Format(e.to_string()))?;
    Ok(WaveState {
        grid,
        values,
        frame: Frame::Original,
        t: 0.0,
    })
}
