//! Test paths built from the tables and the dense-grid check that their
//! action stays below the collision bound `g1`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{path_action, ActionBreakdown, DiscretePath};
use crate::error::{Error, Result};
use crate::kepler::g1;
use crate::tables::{builtin_tables, TestPathTable};

/// Table whose interval contains `theta`; shared endpoints go to the lower one.
pub fn table_for(theta: f64) -> Result<&'static TestPathTable> {
    builtin_tables()
        .iter()
        .find(|t| t.contains(theta))
        .ok_or_else(|| Error::Domain(format!("theta={theta} outside the tabulated range (0, 0.143pi]")))
}

/// Nodes 0..9 of `table` followed by its end rectangle rotated by `theta`.
pub fn test_path_from(table: &TestPathTable, theta: f64) -> DiscretePath {
    let mut nodes = table.nodes.to_vec();
    nodes[10] = table.nodes[10].rotate(theta);
    DiscretePath::new(nodes).expect("11 nodes on [0, 1]")
}

pub fn build_test_path(theta: f64) -> Result<DiscretePath> {
    Ok(test_path_from(table_for(theta)?, theta))
}

pub fn test_action(theta: f64) -> Result<ActionBreakdown> {
    path_action(&build_test_path(theta)?)
}

/// Margin summary on one table interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalSummary {
    pub table: usize,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub min_margin: f64,
    pub argmin_theta: f64,
    /// Largest finite-difference slopes of the two curves on the grid.
    pub lipschitz_a_test: f64,
    pub lipschitz_g1: f64,
    /// `min_margin − (L_a + L_g)·h/2`: positive means the gap between grid
    /// points cannot close if the slope estimates hold.
    pub between_grid_margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertReport {
    pub theta_grid: Vec<f64>,
    pub a_test: Vec<f64>,
    pub g1: Vec<f64>,
    pub min_margin: f64,
    pub argmin_theta: f64,
    pub intervals: Vec<IntervalSummary>,
}

impl CertReport {
    pub fn passed(&self) -> bool {
        self.min_margin > 0.0
    }

    pub fn margins(&self) -> impl Iterator<Item = f64> + '_ {
        self.g1.iter().zip(&self.a_test).map(|(g, a)| g - a)
    }

    /// CSV with columns `theta,a_test,g1,margin`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "theta,a_test,g1,margin")?;
        for ((t, a), g) in self.theta_grid.iter().zip(&self.a_test).zip(&self.g1) {
            writeln!(w, "{t:.16e},{a:.16e},{g:.16e},{:.16e}", g - a)?;
        }
        Ok(())
    }
}

/// Grid on the interval of table `k`. The first interval is open at 0, so its
/// grid is `hi·(i+1)/grid` instead of including the left end.
pub fn interval_grid(table: &TestPathTable, grid: usize) -> Vec<f64> {
    let (lo, hi) = (table.theta_lo, table.theta_hi);
    if lo == 0.0 {
        (0..grid).map(|i| hi * (i + 1) as f64 / grid as f64).collect()
    } else {
        (0..grid)
            .map(|i| {
                if i + 1 == grid {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (grid - 1) as f64
                }
            })
            .collect()
    }
}

/// Evaluates `g1 − A(P_test)` on `grid` points of each of the eight intervals,
/// every interval using its own table.
pub fn certify(grid: usize) -> Result<CertReport> {
    if grid < 2 {
        return Err(Error::Domain(format!("grid must be at least 2, got {grid}")));
    }
    let tables = builtin_tables();
    let per_table: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = tables
        .par_iter()
        .map(|table| {
            let thetas = interval_grid(table, grid);
            let rows: Result<Vec<(f64, f64)>> = thetas
                .par_iter()
                .map(|&th| Ok((path_action(&test_path_from(table, th))?.total, g1(th)?)))
                .collect();
            let (a, g): (Vec<f64>, Vec<f64>) = rows?.into_iter().unzip();
            Ok((thetas, a, g))
        })
        .collect::<Result<_>>()?;

    let mut report = CertReport {
        theta_grid: Vec::with_capacity(8 * grid),
        a_test: Vec::with_capacity(8 * grid),
        g1: Vec::with_capacity(8 * grid),
        min_margin: f64::INFINITY,
        argmin_theta: f64::NAN,
        intervals: Vec::with_capacity(8),
    };
    for (k, (thetas, a, g)) in per_table.into_iter().enumerate() {
        let mut summary = IntervalSummary {
            table: k,
            theta_lo: tables[k].theta_lo,
            theta_hi: tables[k].theta_hi,
            min_margin: f64::INFINITY,
            argmin_theta: f64::NAN,
            lipschitz_a_test: 0.0,
            lipschitz_g1: 0.0,
            between_grid_margin: f64::NAN,
        };
        let mut h_max = 0.0_f64;
        for i in 0..thetas.len() {
            let m = g[i] - a[i];
            if m < summary.min_margin {
                summary.min_margin = m;
                summary.argmin_theta = thetas[i];
            }
            if i > 0 {
                let h = thetas[i] - thetas[i - 1];
                h_max = h_max.max(h);
                summary.lipschitz_a_test = summary.lipschitz_a_test.max(((a[i] - a[i - 1]) / h).abs());
                summary.lipschitz_g1 = summary.lipschitz_g1.max(((g[i] - g[i - 1]) / h).abs());
            }
        }
        summary.between_grid_margin =
            summary.min_margin - 0.5 * h_max * (summary.lipschitz_a_test + summary.lipschitz_g1);
        if summary.min_margin < report.min_margin {
            report.min_margin = summary.min_margin;
            report.argmin_theta = summary.argmin_theta;
        }
        report.theta_grid.extend(thetas);
        report.a_test.extend(a);
        report.g1.extend(g);
        report.intervals.push(summary);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::path_clearance;
    use crate::geometry::{membership, rotate, BoundarySet};
    use std::f64::consts::PI;

    #[test]
    fn build_examples() {
        let p = build_test_path(0.004 * PI).unwrap();
        let expect = rotate(crate::geometry::PlanarVec::new(-14.690399, -0.46419802), 0.004 * PI);
        assert_eq!(p.last().q1, expect);
        let p = build_test_path(0.05 * PI).unwrap();
        assert_eq!(p.nodes[3], builtin_tables()[3].nodes[3]);
        assert!(matches!(build_test_path(0.2 * PI), Err(Error::Domain(_))));
        assert!(build_test_path(0.0).is_err());
        // Shared endpoint resolves to the lower table.
        let p = build_test_path(0.008 * PI).unwrap();
        assert_eq!(p.nodes[0], builtin_tables()[0].nodes[0]);
    }

    #[test]
    fn paths_are_feasible_and_clear() {
        for table in builtin_tables() {
            for th in interval_grid(table, 33) {
                let p = test_path_from(table, th);
                assert!(membership(p.first(), BoundarySet::Start, 1e-9).is_some());
                assert!(membership(p.last(), BoundarySet::Prograde(th), 1e-9).is_some());
                assert!(path_clearance(&p).0 > 1e-6);
            }
        }
    }

    #[test]
    fn action_is_continuous_in_theta() {
        let a = test_action(0.05 * PI).unwrap().total;
        let b = test_action(0.0500001 * PI).unwrap().total;
        assert!((a - b).abs() < 1e-4);
        assert!(test_action(PI / 7.0).unwrap().total < g1(PI / 7.0).unwrap());
    }

    #[test]
    fn coarse_certificate() {
        let r = certify(2).unwrap();
        assert_eq!(r.theta_grid.len(), 16);
        assert!(r.passed(), "min margin {}", r.min_margin);
        assert!(certify(1).is_err());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("theta,a_test,g1,margin\n"));
        assert_eq!(text.lines().count(), 17);
    }
}
