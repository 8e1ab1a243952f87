//! Plain-text serialization of scenes and observations, one file per trial.
//!
//! The format is line-oriented `key value…` text. Every float is written
//! with 17 significant digits (`{:.16e}`), which round-trips `f64` values
//! bit-exactly through a correctly-rounded parse.
//!
//! Scene layout:
//!
//! ```text
//! scene v1
//! n_users 100
//! horizon 4
//! noise_sigma 1.0000000000000001e-1
//! n_active 2
//! user 17
//! paths 2
//! angle 7.8530000000000000e-1
//! angle 9.1000000000000000e-1
//! gain 3.5000000000000000e-1 -1.2000000000000000e-1
//! gain ...
//! data 5.0000000000000000e-1 1.2000000000000000e0 ...
//! user 63
//! ...
//! end
//! ```
//!
//! Observation layout mirrors it: header lines (`n_antennas`,
//! `spacing_ratio`, `observed`, `horizon`, `c1`) followed by `M` `row` lines
//! holding `T` re/im pairs, then `end`.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{ActiveUser, ArrayConfig, Observation, Scene};
use crate::error::{Error, Result};

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write a scene in the trial text format.
pub fn write_scene<W: Write>(scene: &Scene, out: &mut W) -> Result<()> {
    scene.validate()?;
    writeln!(out, "scene v1")?;
    writeln!(out, "n_users {}", scene.n_users)?;
    writeln!(out, "horizon {}", scene.horizon)?;
    writeln!(out, "noise_sigma {}", fmt(scene.noise_sigma))?;
    writeln!(out, "n_active {}", scene.active.len())?;
    for user in &scene.active {
        writeln!(out, "user {}", user.id)?;
        writeln!(out, "paths {}", user.path_angles.len())?;
        for &theta in &user.path_angles {
            writeln!(out, "angle {}", fmt(theta))?;
        }
        for g in &user.path_gains {
            writeln!(out, "gain {} {}", fmt(g.re), fmt(g.im))?;
        }
        let data: Vec<String> = user.data.iter().map(|&x| fmt(x)).collect();
        writeln!(out, "data {}", data.join(" "))?;
    }
    writeln!(out, "end")?;
    Ok(())
}

/// Read a scene written by [`write_scene`].
pub fn read_scene<R: BufRead>(input: R) -> Result<Scene> {
    let mut lines = Lines::new(input)?;
    lines.expect_tag("scene v1")?;
    let n_users = lines.take_usize("n_users")?;
    let horizon = lines.take_usize("horizon")?;
    let noise_sigma = lines.take_f64("noise_sigma")?;
    let n_active = lines.take_usize("n_active")?;
    let mut active = Vec::with_capacity(n_active);
    for _ in 0..n_active {
        let id = lines.take_usize("user")?;
        let paths = lines.take_usize("paths")?;
        let mut path_angles = Vec::with_capacity(paths);
        for _ in 0..paths {
            path_angles.push(lines.take_f64("angle")?);
        }
        let mut path_gains = Vec::with_capacity(paths);
        for _ in 0..paths {
            let (re, im) = lines.take_f64_pair("gain")?;
            path_gains.push(Complex64::new(re, im));
        }
        let data = lines.take_f64_list("data", horizon)?;
        active.push(ActiveUser {
            id,
            path_angles,
            path_gains,
            data: DVector::from_vec(data),
        });
    }
    lines.expect_tag("end")?;
    let scene = Scene {
        n_users,
        horizon,
        noise_sigma,
        active,
    };
    scene.validate()?;
    Ok(scene)
}

/// Write an observation in the trial text format.
pub fn write_observation<W: Write>(obs: &Observation, out: &mut W) -> Result<()> {
    writeln!(out, "observation v1")?;
    writeln!(out, "n_antennas {}", obs.array.n_antennas())?;
    writeln!(out, "spacing_ratio {}", fmt(obs.array.spacing_ratio()))?;
    let omega: Vec<String> = obs.array.observed_set().iter().map(|i| i.to_string()).collect();
    writeln!(out, "observed {}", omega.join(" "))?;
    writeln!(out, "horizon {}", obs.horizon)?;
    writeln!(out, "c1 {}", fmt(obs.c1))?;
    for i in 0..obs.y.nrows() {
        let mut parts = Vec::with_capacity(2 * obs.y.ncols());
        for j in 0..obs.y.ncols() {
            parts.push(fmt(obs.y[(i, j)].re));
            parts.push(fmt(obs.y[(i, j)].im));
        }
        writeln!(out, "row {}", parts.join(" "))?;
    }
    writeln!(out, "end")?;
    Ok(())
}

/// Read an observation written by [`write_observation`].
pub fn read_observation<R: BufRead>(input: R) -> Result<Observation> {
    let mut lines = Lines::new(input)?;
    lines.expect_tag("observation v1")?;
    let n_antennas = lines.take_usize("n_antennas")?;
    let spacing_ratio = lines.take_f64("spacing_ratio")?;
    let observed = lines.take_usize_list("observed")?;
    let horizon = lines.take_usize("horizon")?;
    let c1 = lines.take_f64("c1")?;
    let array = ArrayConfig::new(n_antennas, observed, spacing_ratio)?;
    let m = array.n_observed();
    let mut y = DMatrix::zeros(m, horizon);
    for i in 0..m {
        let row = lines.take_f64_list("row", 2 * horizon)?;
        for j in 0..horizon {
            y[(i, j)] = Complex64::new(row[2 * j], row[2 * j + 1]);
        }
    }
    lines.expect_tag("end")?;
    if !(c1 > 0.0) {
        return Err(Error::Parse(format!("c1 must be positive, got {c1}")));
    }
    Ok(Observation {
        y,
        array,
        horizon,
        c1,
    })
}

/// Non-empty input lines with `key value…` splitting.
struct Lines {
    rows: std::vec::IntoIter<String>,
}

impl Lines {
    fn new<R: BufRead>(input: R) -> Result<Self> {
        let mut rows = Vec::new();
        for line in input.lines() {
            let line = line?;
            if !line.trim().is_empty() {
                rows.push(line.trim().to_string());
            }
        }
        Ok(Self {
            rows: rows.into_iter(),
        })
    }

    fn next_line(&mut self) -> Result<String> {
        self.rows
            .next()
            .ok_or_else(|| Error::Parse("unexpected end of input".into()))
    }

    fn expect_tag(&mut self, tag: &str) -> Result<()> {
        let line = self.next_line()?;
        if line != tag {
            return Err(Error::Parse(format!("expected `{tag}`, found `{line}`")));
        }
        Ok(())
    }

    fn take_parts(&mut self, key: &str) -> Result<Vec<String>> {
        let line = self.next_line()?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some(k) if k == key => Ok(it.map(str::to_string).collect()),
            other => Err(Error::Parse(format!(
                "expected key `{key}`, found `{}`",
                other.unwrap_or("<eol>")
            ))),
        }
    }

    fn take_usize(&mut self, key: &str) -> Result<usize> {
        let parts = self.take_parts(key)?;
        parse_one(&parts, key)?
            .parse()
            .map_err(|e| Error::Parse(format!("bad integer for `{key}`: {e}")))
    }

    fn take_f64(&mut self, key: &str) -> Result<f64> {
        let parts = self.take_parts(key)?;
        parse_one(&parts, key)?
            .parse()
            .map_err(|e| Error::Parse(format!("bad float for `{key}`: {e}")))
    }

    fn take_f64_pair(&mut self, key: &str) -> Result<(f64, f64)> {
        let v = self.take_f64_list(key, 2)?;
        Ok((v[0], v[1]))
    }

    fn take_f64_list(&mut self, key: &str, expect_len: usize) -> Result<Vec<f64>> {
        let parts = self.take_parts(key)?;
        if parts.len() != expect_len {
            return Err(Error::Parse(format!(
                "`{key}` expects {expect_len} values, found {}",
                parts.len()
            )));
        }
        parts
            .iter()
            .map(|p| {
                p.parse()
                    .map_err(|e| Error::Parse(format!("bad float in `{key}`: {e}")))
            })
            .collect()
    }

    fn take_usize_list(&mut self, key: &str) -> Result<Vec<usize>> {
        self.take_parts(key)?
            .iter()
            .map(|p| {
                p.parse()
                    .map_err(|e| Error::Parse(format!("bad index in `{key}`: {e}")))
            })
            .collect()
    }
}

fn parse_one<'a>(parts: &'a [String], key: &str) -> Result<&'a String> {
    if parts.len() != 1 {
        return Err(Error::Parse(format!(
            "`{key}` expects one value, found {}",
            parts.len()
        )));
    }
    Ok(&parts[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{generate_scene, observe, SceneParams};

    #[test]
    fn scene_round_trips_bit_exactly() {
        let params = SceneParams::new(50, 3, 3, 4, 32).with_noise_sigma(0.123456789);
        let scene = generate_scene(&params, 13).unwrap();
        let mut buf = Vec::new();
        write_scene(&scene, &mut buf).unwrap();
        let back = read_scene(buf.as_slice()).unwrap();
        assert_eq!(scene, back);
    }

    #[test]
    fn observation_round_trips_bit_exactly() {
        let params = SceneParams::new(50, 2, 2, 3, 16).with_noise_sigma(0.05);
        let scene = generate_scene(&params, 4).unwrap();
        let array = ArrayConfig::first_m(16, 11).unwrap();
        let obs = observe(&scene, &array, 4).unwrap();
        let mut buf = Vec::new();
        write_observation(&obs, &mut buf).unwrap();
        let back = read_observation(buf.as_slice()).unwrap();
        assert_eq!(obs, back);
    }

    #[test]
    fn empty_scene_round_trips() {
        let scene = generate_scene(&SceneParams::new(10, 0, 2, 2, 8), 1).unwrap();
        let mut buf = Vec::new();
        write_scene(&scene, &mut buf).unwrap();
        let back = read_scene(buf.as_slice()).unwrap();
        assert_eq!(scene, back);
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(read_scene("not a scene\n".as_bytes()).is_err());
        let truncated = "scene v1\nn_users 5\n";
        assert!(read_scene(truncated.as_bytes()).is_err());
    }
}
