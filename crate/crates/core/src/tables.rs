//! The eight published test-path tables, embedded as the printed decimals.
//!
//! Each table gives 10 nodes at `t = j/10`, `j = 0..9`, and the radii of the
//! end configuration at `t = 1`, which is rotated by the actual `θ` when a
//! test path is built. Angles are stored as multiples of `π`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::{PlanarVec, ReducedConfig};

struct RawTable {
    theta0_over_pi: &'static str,
    lo_over_pi: &'static str,
    hi_over_pi: &'static str,
    rows: [[&'static str; 4]; 10],
    end_row: [&'static str; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestPathTable {
    /// Anchor angle in radians.
    pub theta0: f64,
    /// Validity interval in radians. The first table's interval is open at 0.
    pub theta_lo: f64,
    pub theta_hi: f64,
    /// Nodes at `t = j/10`; the last one is the un-rotated end rectangle.
    pub nodes: [ReducedConfig; 11],
    /// `(b11, b21)`.
    pub endpoint_radii: (f64, f64),
}

/// Parses a decimal literal or a `num/den` fraction.
fn parse_number(s: &str) -> Result<f64> {
    let bad = || Error::TableData(format!("cannot parse {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|_| bad())?;
            let d: f64 = d.trim().parse().map_err(|_| bad())?;
            Ok(n / d)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

impl TestPathTable {
    fn from_raw(raw: &RawTable) -> Result<Self> {
        let mut nodes = [ReducedConfig::default(); 11];
        for (node, row) in nodes.iter_mut().zip(&raw.rows) {
            let v: Vec<f64> = row.iter().map(|s| parse_number(s)).collect::<Result<_>>()?;
            *node = ReducedConfig::new(PlanarVec::new(v[0], v[1]), PlanarVec::new(v[2], v[3]));
        }
        let x = parse_number(raw.end_row[0])?;
        let y = parse_number(raw.end_row[1])?;
        let (b11, b21) = (-x, -y);
        if !(b11 > 0.0 && b21 > 0.0) {
            return Err(Error::TableData(format!("endpoint radii ({b11}, {b21}) not positive")));
        }
        nodes[10] = ReducedConfig::new(PlanarVec::new(-b11, -b21), PlanarVec::new(-b11, b21));
        Ok(Self {
            theta0: parse_number(raw.theta0_over_pi)? * PI,
            theta_lo: parse_number(raw.lo_over_pi)? * PI,
            theta_hi: parse_number(raw.hi_over_pi)? * PI,
            nodes,
            endpoint_radii: (b11, b21),
        })
    }

    /// Whether `theta` lies in the validity interval.
    pub fn contains(&self, theta: f64) -> bool {
        let above = if self.theta_lo == 0.0 {
            theta > 0.0
        } else {
            theta >= self.theta_lo
        };
        above && theta <= self.theta_hi
    }
}

/// The eight tables, ordered by anchor angle. Parsed once.
pub fn builtin_tables() -> &'static [TestPathTable] {
    static TABLES: OnceLock<Vec<TestPathTable>> = OnceLock::new();
    TABLES.get_or_init(|| {
        RAW.iter()
            .map(|r| TestPathTable::from_raw(r).expect("embedded table data is well formed"))
            .collect()
    })
}

const RAW: [RawTable; 8] = [
    RawTable {
        theta0_over_pi: "0.004",
        lo_over_pi: "0",
        hi_over_pi: "0.008",
        rows: [
            ["-15.1518", "0", "-14.2200", "0"],
            ["-15.146042", "-0.091279146", "-14.225735", "0.054329153"],
            ["-15.128907", "-0.18076174", "-14.242800", "0.10686181"],
            ["-15.100813", "-0.26669405", "-14.270778", "0.15584427"],
            ["-15.062445", "-0.34740702", "-14.308983", "0.19960753"],
            ["-15.014739", "-0.42135648", "-14.356480", "0.23660749"],
            ["-14.958863", "-0.48716069", "-14.412101", "0.26546247"],
            ["-14.896186", "-0.54363450", "-14.474476", "0.28498734"],
            ["-14.828251", "-0.58981914", "-14.542064", "0.29422344"],
            ["-14.756734", "-0.62500716", "-14.613186", "0.29246336"],
        ],
        end_row: ["-14.690399", "-0.46419802"],
    },
    RawTable {
        theta0_over_pi: "0.018",
        lo_over_pi: "0.008",
        hi_over_pi: "0.028",
        rows: [
            ["-5.8458", "0", "-4.9361", "0"],
            ["-5.8396919", "-0.10432174", "-4.9420342", "0.043361970"],
            ["-5.8215282", "-0.20668454", "-4.9596764", "0.084766386"],
            ["-5.7917856", "-0.30518228", "-4.9885502", "0.12230858"],
            ["-5.7512441", "-0.39801280", "-5.0278764", "0.15418793"],
            ["-5.7009650", "-0.48352589", "-5.0765944", "0.17875591"],
            ["-5.6422617", "-0.56026667", "-5.1333916", "0.19455952"],
            ["-5.5766644", "-0.62701339", "-5.1967388", "0.20037900"],
            ["-5.5058791", "-0.68280867", "-5.2649309", "0.19525917"],
            ["-5.4317422", "-0.72698371", "-5.3361320", "0.17853356"],
        ],
        end_row: ["-5.3905192", "-0.45523850"],
    },
    RawTable {
        theta0_over_pi: "0.03",
        lo_over_pi: "0.028",
        hi_over_pi: "0.034",
        rows: [
            ["-4.2855", "0", "-3.3909", "0"],
            ["-4.2791142", "-0.11069104", "-3.3969393", "0.038371747"],
            ["-4.2601331", "-0.21930061", "-3.4148818", "0.074666326"],
            ["-4.2290790", "-0.32380829", "-3.4442064", "0.10686782"],
            ["-4.1868040", "-0.42231316", "-3.4840637", "0.13308021"],
            ["-4.1344625", "-0.51308748", "-3.5333025", "0.15158123"],
            ["-4.0734756", "-0.59462386", "-3.5905049", "0.16086951"],
            ["-4.0054892", "-0.66567464", "-3.6540287", "0.15970405"],
            ["-3.9323262", "-0.72528309", "-3.7220540", "0.14713539"],
            ["-3.8559370", "-0.77280625", "-3.7926332", "0.12252826"],
        ],
        end_row: ["-3.8376110", "-0.44877012"],
    },
    RawTable {
        theta0_over_pi: "0.05",
        lo_over_pi: "0.034",
        hi_over_pi: "0.065",
        rows: [
            ["-3.1696", "0", "-2.3003", "0"],
            ["-3.1627095", "-0.11876142", "-2.3064958", "0.032933599"],
            ["-3.1422468", "-0.23520781", "-2.3248765", "0.063565376"],
            ["-3.1088297", "-0.34710502", "-2.3548308", "0.089675244"],
            ["-3.0634571", "-0.45237514", "-2.3953692", "0.10920087"],
            ["-3.0074674", "-0.54916175", "-2.4451653", "0.12030341"],
            ["-2.9424861", "-0.63588248", "-2.5026068", "0.12142021"],
            ["-2.8703679", "-0.71126796", "-2.5658520", "0.11130378"],
            ["-2.7931366", "-0.77438823", "-2.6328896", "0.089047953"],
            ["-2.7129249", "-0.82466824", "-2.7015971", "0.054103098"],
        ],
        end_row: ["-2.7343443", "-4.3956085e-01"],
    },
    RawTable {
        theta0_over_pi: "0.08",
        lo_over_pi: "0.065",
        hi_over_pi: "0.09",
        rows: [
            ["-2.4188", "0", "-1.5888", "0"],
            ["-2.4110407", "-0.12842593", "-1.5952285", "0.028061987"],
            ["-2.3880438", "-0.25409459", "-1.6142407", "0.053403695"],
            ["-2.3506306", "-0.37438071", "-1.6450374", "0.073439868"],
            ["-2.3001048", "-0.48690627", "-1.6863483", "0.085837874"],
            ["-2.2381675", "-0.58962746", "-1.7365132", "0.088605895"],
            ["-2.1668220", "-0.68088937", "-1.7935727", "0.080147754"],
            ["-2.0882795", "-0.75945148", "-1.8553595", "0.059287837"],
            ["-2.0048754", "-0.82449143", "-1.9195791", "0.025273911"],
            ["-1.9189986", "-0.87559567", "-1.9838788", "-0.022233220"],
        ],
        end_row: ["-2.0024358", "-0.42821223"],
    },
    RawTable {
        theta0_over_pi: "0.105",
        lo_over_pi: "0.09",
        hi_over_pi: "0.115",
        rows: [
            ["-2.0714", "0", "-1.2762", "0"],
            ["-2.0627869", "-0.13555195", "-1.2828633", "0.025872842"],
            ["-2.0373204", "-0.26785892", "-1.3024968", "0.048567515"],
            ["-1.9960769", "-0.39388341", "-1.3340701", "0.065120003"],
            ["-1.9407255", "-0.51096381", "-1.3759829", "0.072953603"],
            ["-1.8733764", "-0.61692062", "-1.4262070", "0.069986974"],
            ["-1.7964262", "-0.71009881", "-1.4824331", "0.054675903"],
            ["-1.7124226", "-0.78936084", "-1.5421998", "0.026004440"],
            ["-1.6239615", "-0.85405132", "-1.6029917", "-0.016552740"],
            ["-1.5336164", "-0.90395216", "-1.6623084", "-0.073077108"],
        ],
        end_row: ["-1.6702821", "-0.42090108"],
    },
    RawTable {
        theta0_over_pi: "0.125",
        lo_over_pi: "0.115",
        hi_over_pi: "0.131",
        rows: [
            ["-1.8747", "0", "-1.1084", "0"],
            ["-1.8653084", "-0.14102665", "-1.1152970", "0.025082411"],
            ["-1.8376112", "-0.27831768", "-1.1355368", "0.046526278"],
            ["-1.7929705", "-0.40844171", "-1.1678315", "0.061008716"],
            ["-1.7334462", "-0.52850073", "-1.2102297", "0.065759036"],
            ["-1.6615594", "-0.63624643", "-1.2603383", "0.058677054"],
            ["-1.5800686", "-0.73009218", "-1.3155326", "0.038342913"],
            ["-1.4917988", "-0.80905691", "-1.3731187", "0.0039570466"],
            ["-1.3995301", "-0.87268087", "-1.4304397", "-0.044747959"],
            ["-1.3059394", "-0.92094300", "-1.4849323", "-0.10759299"],
        ],
        end_row: ["-1.4863528", "-0.41714747"],
    },
    RawTable {
        theta0_over_pi: "1/7",
        lo_over_pi: "0.131",
        hi_over_pi: "0.143",
        rows: [
            ["-1.7349", "0", "-0.9955", "0"],
            ["-1.7247204", "-0.14586180", "-1.0026649", "0.025062574"],
            ["-1.6947882", "-0.28744790", "-1.0235916", "0.045977949"],
            ["-1.6468072", "-0.42091637", "-1.0566833", "0.059050379"],
            ["-1.5832849", "-0.54315955", "-1.0995868", "0.061346424"],
            ["-1.5071821", "-0.65191650", "-1.1495198", "0.050808846"],
            ["-1.4216133", "-0.74573079", "-1.2035518", "0.026209663"],
            ["-1.3296454", "-0.82382617", "-1.2587950", "-0.012980827"],
            ["-1.2341931", "-0.88596482", "-1.3125040", "-0.066741588"],
            ["-1.1379838", "-0.93232697", "-1.3621100", "-0.13462543"],
        ],
        end_row: ["-1.3582328", "-0.41523306"],
    },

];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{membership, BoundarySet};

    #[test]
    fn printed_values() {
        let t = builtin_tables();
        assert_eq!(t.len(), 8);
        assert_eq!(t[0].nodes[0].q1, PlanarVec::new(-15.1518, 0.0));
        assert_eq!(t[7].endpoint_radii, (1.3582328, 0.41523306));
        assert_eq!(t[3].theta_lo, 0.034 * PI);
        assert_eq!(t[3].theta_hi, 0.065 * PI);
        assert_eq!(t[7].theta0, PI / 7.0);
        assert_eq!(t[3].nodes[10].q2, PlanarVec::new(-2.7343443, 4.3956085e-01));
    }

    #[test]
    fn intervals_tile_the_range() {
        let t = builtin_tables();
        assert_eq!(t[0].theta_lo, 0.0);
        assert!(!t[0].contains(0.0));
        for w in t.windows(2) {
            assert_eq!(w[0].theta_hi, w[1].theta_lo);
        }
        assert_eq!(t[7].theta_hi, 0.143 * PI);
        for table in t {
            assert!(table.contains(table.theta0));
        }
    }

    #[test]
    fn start_rows_are_in_v0() {
        for table in builtin_tables() {
            assert!(membership(&table.nodes[0], BoundarySet::Start, 1e-12).is_some());
        }
    }

    #[test]
    fn fractions_parse() {
        assert_eq!(parse_number("1/7").unwrap(), 1.0 / 7.0);
        assert_eq!(parse_number("-4.3956085e-01").unwrap(), -0.43956085);
        assert!(parse_number("x").is_err());
    }
}
