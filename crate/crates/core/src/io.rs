//! CSV, JSON and binary snapshot formats.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::basis::{Angular, ModeTable, Parity};
use crate::controller::{GainSet, StabilityReport};
use crate::diagnostics::NormSeries;
use crate::error::{Error, Result};
use crate::simulator::Trajectory;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"MSTB";
pub const SNAPSHOT_VERSION: u32 = 1;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Non-finite values have no JSON number form and become `null`.
pub fn json_f64(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn matrix_json(m: &DMatrix<f64>) -> Value {
    Value::Array(m.row_iter().map(|r| Value::Array(r.iter().map(|v| Value::String(fmt_f64(*v))).collect())).collect())
}

pub fn mode_table_csv(table: &ModeTable) -> String {
    let mut out = String::new();
    let ball = matches!(table.domain.shape, crate::basis::Shape::Ball);
    if ball {
        out.push_str("n,l,m,k,alpha,kappa,mu,norm_const,trace_amp\n");
    } else {
        out.push_str("n,m,parity,k,alpha,kappa,mu,norm_const,trace_amp\n");
    }
    for (i, m) in table.modes.iter().enumerate() {
        let angular = match m.angular {
            Angular::Disk { m, parity } => {
                format!("{m},{}", if parity == Parity::Cos { "cos" } else { "sin" })
            }
            Angular::Ball { l, m } => format!("{l},{m}"),
        };
        let _ = writeln!(
            out,
            "{},{angular},{},{},{},{},{},{}",
            i + 1,
            m.radial_rank,
            fmt_f64(m.alpha),
            fmt_f64(m.kappa),
            fmt_f64(m.mu),
            fmt_f64(m.norm_const),
            fmt_f64(m.trace_amp)
        );
    }
    out
}

pub fn spectrum_json(table: &ModeTable, leading: usize) -> Value {
    json!({
        "shape": table.domain.shape.name(),
        "radius": table.domain.radius,
        "lambda": table.lambda,
        "N": table.unstable(),
        "n_sim": table.len(),
        "unstable_eigenvalues": table.modes[..table.unstable()].iter().map(|m| m.mu).collect::<Vec<_>>(),
        "leading_eigenvalues": table.modes.iter().take(leading).map(|m| m.mu).collect::<Vec<_>>(),
    })
}

pub fn stability_json(r: &StabilityReport) -> Value {
    json!({
        "margin_paper": json_f64(r.margin_paper),
        "margin_direct": json_f64(r.margin_direct),
        "hurwitz_paper": r.hurwitz_paper,
        "hurwitz_direct": r.hurwitz_direct,
        "c1_hat": json_f64(r.c1_hat),
        "sigma_hat": json_f64(r.sigma_hat),
    })
}

pub fn gains_json(g: &GainSet, report: &StabilityReport) -> Value {
    json!({
        "gammas": g.gammas,
        "mus": g.mus,
        "B": matrix_json(&g.b),
        "A": matrix_json(&g.a),
        "S_paper": matrix_json(&g.s_paper),
        "A_cl_direct": matrix_json(&g.a_cl_direct),
        "condition_sum_Bi": json_f64(g.condition),
        "stability": stability_json(report),
    })
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.n_unstable;
    let mut out = String::from("t");
    for i in 1..=n {
        let _ = write!(out, ",u_{i}");
    }
    out.push_str(",tail_energy");
    for i in 1..=n {
        let _ = write!(out, ",v_coeff_{i}");
    }
    out.push('\n');
    for k in 0..traj.len() {
        out.push_str(&fmt_f64(traj.times[k]));
        for u in traj.leading(k) {
            out.push(',');
            out.push_str(&fmt_f64(*u));
        }
        out.push(',');
        out.push_str(&fmt_f64(traj.tail_energy(k)));
        for v in &traj.boundary[k] {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn norm_series_csv(s: &NormSeries) -> String {
    let mut out = String::from("t,h2_surrogate,h2_full,linf,laplacian_l2,u_norm,dudt_l2");
    for i in 1..=s.xi.len() {
        let _ = write!(out, ",xi_{i}");
    }
    out.push('\n');
    for k in 0..s.times.len() {
        let row =
            [s.times[k], s.h2_surrogate[k], s.h2_full[k], s.linf[k], s.laplacian_l2[k], s.u_norm[k], s.dudt_l2[k]];
        let cells: Vec<String> = row.iter().copied().chain(s.xi.iter().map(|x| x[k])).map(fmt_f64).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Header `MSTB`, version, `N_sim`, sample count (little-endian `u32`), then
/// every state as little-endian `f64`.
pub fn snapshot_bytes(traj: &Trajectory) -> Vec<u8> {
    let n_sim = traj.states.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(16 + 8 * n_sim * traj.len());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&(n_sim as u32).to_le_bytes());
    out.extend_from_slice(&(traj.len() as u32).to_le_bytes());
    for s in &traj.states {
        for v in s {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_snapshot(bytes: &[u8]) -> Result<Vec<Vec<f64>>> {
    let bad = |m: &str| Error::Io(format!("malformed snapshot: {m}"));
    if bytes.len() < 16 || &bytes[..4] != SNAPSHOT_MAGIC {
        return Err(bad("missing header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4-byte slice")) as usize;
    if word(4) != SNAPSHOT_VERSION as usize {
        return Err(bad("unsupported version"));
    }
    let (n, count) = (word(8), word(12));
    if bytes.len() != 16 + 8 * n * count {
        return Err(bad("length does not match header"));
    }
    Ok(bytes[16..]
        .chunks_exact(8 * n.max(1))
        .take(count)
        .map(|row| row.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8-byte slice"))).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{enumerate_modes, Domain};

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -1.0 / 3.0, 6.61, 1e-300, 5.164_198_765_432_1e10] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(json_f64(f64::NEG_INFINITY), Value::Null);
    }

    #[test]
    fn mode_csv_layout() {
        let t = enumerate_modes(&Domain::disk(2.0), 6.61, 5).unwrap();
        let csv = mode_table_csv(&t);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines[1].starts_with("1,0,cos,1,"));
        assert_eq!(lines[1].split(',').count(), 9);
        let b = enumerate_modes(&Domain::ball(2.0), 6.61, 4).unwrap();
        assert!(mode_table_csv(&b).starts_with("n,l,m,k,"));
        assert_eq!(spectrum_json(&t, 5)["N"], 5);
    }

    #[test]
    fn snapshot_round_trip() {
        let traj = Trajectory {
            times: vec![0.0, 0.5],
            states: vec![vec![1.0, -2.0, 0.25], vec![0.5, 3.0, -1e-9]],
            boundary: vec![vec![0.0], vec![0.0]],
            n_unstable: 1,
            truncated: false,
        };
        let bytes = snapshot_bytes(&traj);
        assert_eq!(&bytes[..4], b"MSTB");
        assert_eq!(bytes.len(), 16 + 8 * 6);
        assert_eq!(read_snapshot(&bytes).unwrap(), traj.states);
        assert!(read_snapshot(&bytes[..20]).is_err());
        let csv = trajectory_csv(&traj);
        assert_eq!(csv.lines().next().unwrap(), "t,u_1,tail_energy,v_coeff_1");
        assert!(csv.lines().nth(1).unwrap().contains("4.0625000000000000e0"));
    }
}
