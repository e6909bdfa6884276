//! Panel serialization: column-major CSV `i,j,t,x` and a compact little-endian
//! binary form.
//!
//! Binary layout: `b"LDPPANEL"`, `u32` version (1), `u64` N, `u64` n,
//! `f64` T, `f64` theta_star, `u64` seed, then `N (n+1)` `f64` values in
//! column-major order (all paths at `t_0`, then all at `t_1`, ...).

use std::io::{BufRead, Read, Write};

use super::{PathPanel, TimeGrid};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"LDPPANEL";
const VERSION: u32 = 1;

pub fn write_panel_csv<W: Write>(panel: &PathPanel, mut out: W) -> Result<()> {
    writeln!(out, "i,j,t,x")?;
    let grid = panel.grid();
    for j in 0..=grid.steps() {
        let t = grid.time(j);
        for i in 0..panel.n_paths() {
            writeln!(out, "{},{},{:?},{:?}", i, j, t, panel.get(i, j))?;
        }
    }
    Ok(())
}

/// Reads a CSV written by [`write_panel_csv`]. The horizon is recovered from
/// the last time stamp; `theta_star` and `seed` are not part of the CSV form.
pub fn read_panel_csv<R: BufRead>(input: R, theta_star: f64, seed: u64) -> Result<PathPanel> {
    let mut cells = Vec::new();
    let (mut max_i, mut max_j, mut horizon) = (0usize, 0usize, 0.0f64);
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        if lineno == 0 {
            if line.trim() != "i,j,t,x" {
                return Err(Error::Format(format!("unexpected CSV header {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Format(format!("line {}: expected 4 fields", lineno + 1)));
        }
        let parse_err = |what: &str| Error::Format(format!("line {}: bad {what}", lineno + 1));
        let i: usize = fields[0].trim().parse().map_err(|_| parse_err("i"))?;
        let j: usize = fields[1].trim().parse().map_err(|_| parse_err("j"))?;
        let t: f64 = fields[2].trim().parse().map_err(|_| parse_err("t"))?;
        let x: f64 = fields[3].trim().parse().map_err(|_| parse_err("x"))?;
        max_i = max_i.max(i);
        if j >= max_j {
            max_j = j;
            horizon = t;
        }
        cells.push((i, j, x));
    }
    if cells.is_empty() || max_j == 0 {
        return Err(Error::Format("panel CSV needs at least two time points".into()));
    }
    let (n_paths, width) = (max_i + 1, max_j + 1);
    if cells.len() != n_paths * width {
        return Err(Error::Shape(format!(
            "{} cells for a {}x{} panel",
            cells.len(),
            n_paths,
            width
        )));
    }
    let mut data = vec![f64::NAN; n_paths * width];
    for (i, j, x) in cells {
        data[i * width + j] = x;
    }
    PathPanel::from_rows(n_paths, TimeGrid::new(horizon, max_j)?, data, theta_star, seed)
}

pub fn write_panel_binary<W: Write>(panel: &PathPanel, mut out: W) -> Result<()> {
    let grid = panel.grid();
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(panel.n_paths() as u64).to_le_bytes())?;
    out.write_all(&(grid.steps() as u64).to_le_bytes())?;
    out.write_all(&grid.horizon().to_le_bytes())?;
    out.write_all(&panel.theta_star().to_le_bytes())?;
    out.write_all(&panel.seed().to_le_bytes())?;
    for j in 0..=grid.steps() {
        for i in 0..panel.n_paths() {
            out.write_all(&panel.get(i, j).to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

pub fn read_panel_binary<R: Read>(mut input: R) -> Result<PathPanel> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a panel file".into()));
    }
    let mut v = [0u8; 4];
    input.read_exact(&mut v)?;
    if u32::from_le_bytes(v) != VERSION {
        return Err(Error::Format(format!(
            "unsupported panel version {}",
            u32::from_le_bytes(v)
        )));
    }
    let n_paths = read_u64(&mut input)? as usize;
    let steps = read_u64(&mut input)? as usize;
    let horizon = read_f64(&mut input)?;
    let theta_star = read_f64(&mut input)?;
    let seed = read_u64(&mut input)?;
    let width = steps + 1;
    let mut data = vec![0.0; n_paths * width];
    for j in 0..width {
        for i in 0..n_paths {
            data[i * width + j] = read_f64(&mut input)?;
        }
    }
    PathPanel::from_rows(n_paths, TimeGrid::new(horizon, steps)?, data, theta_star, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion_sim::{simulate_panel, SimulationOptions};
    use crate::model::SeparableModel;

    fn panel() -> PathPanel {
        simulate_panel(
            &SeparableModel::sine(),
            0.4,
            3,
            TimeGrid::new(1.5, 5).unwrap(),
            &SimulationOptions::default(),
            42,
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let p = panel();
        let mut buf = Vec::new();
        write_panel_csv(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("i,j,t,x"));
        // column-major: second record is path 1 at j = 0
        assert!(lines.nth(1).unwrap().starts_with("1,0,"));
        let back = read_panel_csv(&buf[..], 0.4, 42).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn binary_round_trip_is_exact() {
        let p = panel();
        let mut buf = Vec::new();
        write_panel_binary(&p, &mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 8 * 5 + 8 * 3 * 6);
        let back = read_panel_binary(&buf[..]).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        assert!(read_panel_binary(&b"NOTPANEL\x01\x00\x00\x00"[..]).is_err());
        assert!(read_panel_csv(&b"a,b\n"[..], 0.0, 0).is_err());
        assert!(read_panel_csv(&b"i,j,t,x\n0,0,0.0,0.0\n0,1,1.0,0.5\n1,0,0.0,0.1\n"[..], 0.0, 0).is_err());
    }
}
