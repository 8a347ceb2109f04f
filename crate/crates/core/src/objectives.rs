//! Season objectives as bands of final ranks, and the weekly "fluent"
//! objective picked by MAP over those bands.

use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::league::TeamIdx;
use crate::season_sim::PositionDistribution;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("no default objective bands for a {0}-team league; define them explicitly")]
    NoDefaultBands(usize),
    #[error("invalid objective bands: {0}")]
    InvalidBands(String),
    #[error("team {0} is not in the distribution")]
    UnknownTeam(TeamIdx),
    #[error("expected {expected} entries, got {found}")]
    Shape { expected: usize, found: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ObjectiveId {
    O1,
    O2,
    O3,
    O4,
    O5,
}

impl ObjectiveId {
    pub const ALL: [ObjectiveId; 5] = [ObjectiveId::O1, ObjectiveId::O2, ObjectiveId::O3, ObjectiveId::O4, ObjectiveId::O5];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveId::O1 => "o1",
            ObjectiveId::O2 => "o2",
            ObjectiveId::O3 => "o3",
            ObjectiveId::O4 => "o4",
            ObjectiveId::O5 => "o5",
        }
    }

    pub fn parse(s: &str) -> Option<ObjectiveId> {
        ObjectiveId::ALL.into_iter().find(|o| o.as_str() == s)
    }
}

impl fmt::Display for ObjectiveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inclusive interval of final ranks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveBand {
    pub id: ObjectiveId,
    pub label: String,
    pub lo: usize,
    pub hi: usize,
}

impl ObjectiveBand {
    pub fn contains(&self, rank: usize) -> bool {
        (self.lo..=self.hi).contains(&rank)
    }
}

/// Disjoint bands ordered from most to least ambitious. Ranks after the
/// last band are the failure region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BandSet {
    n_teams: usize,
    bands: Vec<ObjectiveBand>,
}

impl BandSet {
    pub fn new(n_teams: usize, bands: Vec<ObjectiveBand>) -> Result<Self, ObjectiveError> {
        if bands.is_empty() {
            return Err(ObjectiveError::InvalidBands("no bands".into()));
        }
        let mut prev_hi = 0;
        let mut prev_id = None;
        for b in &bands {
            if b.lo < 1 || b.lo > b.hi || b.hi > n_teams {
                return Err(ObjectiveError::InvalidBands(format!("{} [{}, {}] is outside 1..={n_teams}", b.id, b.lo, b.hi)));
            }
            if b.lo <= prev_hi || prev_id.is_some_and(|p| p >= b.id) {
                return Err(ObjectiveError::InvalidBands(format!("{} overlaps or is out of order", b.id)));
            }
            prev_hi = b.hi;
            prev_id = Some(b.id);
        }
        Ok(BandSet { n_teams, bands })
    }

    pub fn n_teams(&self) -> usize {
        self.n_teams
    }

    pub fn bands(&self) -> &[ObjectiveBand] {
        &self.bands
    }

    pub fn band(&self, id: ObjectiveId) -> Option<&ObjectiveBand> {
        self.bands.iter().find(|b| b.id == id)
    }

    /// Band holding `rank`, or `None` in the failure region.
    pub fn band_of_rank(&self, rank: usize) -> Option<ObjectiveId> {
        self.bands.iter().find(|b| b.contains(rank)).map(|b| b.id)
    }

    /// The least ambitious band.
    pub fn last(&self) -> &ObjectiveBand {
        self.bands.last().expect("band sets are never empty")
    }
}

/// The five English Premier League objectives for a 20-team league: title,
/// Champions League (2-4), Europa League (5-7), top half (8-10) and
/// survival (11-17). Ranks 18-20 are relegation.
pub fn default_bands(n_teams: usize) -> Result<BandSet, ObjectiveError> {
    if n_teams != 20 {
        return Err(ObjectiveError::NoDefaultBands(n_teams));
    }
    let band = |id, label: &str, lo, hi| ObjectiveBand { id, label: label.to_string(), lo, hi };
    BandSet::new(
        20,
        vec![
            band(ObjectiveId::O1, "win the league", 1, 1),
            band(ObjectiveId::O2, "qualify for the Champions League", 2, 4),
            band(ObjectiveId::O3, "qualify for the Europa League", 5, 7),
            band(ObjectiveId::O4, "finish in the top half", 8, 10),
            band(ObjectiveId::O5, "avoid relegation", 11, 17),
        ],
    )
}

/// Probability mass of each band (in band order) and what is left over.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveProbabilities {
    pub ids: Vec<ObjectiveId>,
    pub p: Vec<f64>,
    pub residual: f64,
}

impl ObjectiveProbabilities {
    pub fn get(&self, id: ObjectiveId) -> f64 {
        self.ids.iter().position(|&i| i == id).map_or(0.0, |k| self.p[k])
    }
}

pub fn objective_probabilities(
    d: &PositionDistribution,
    team: TeamIdx,
    bands: &BandSet,
) -> Result<ObjectiveProbabilities, ObjectiveError> {
    let row = d.row(team).map_err(|_| ObjectiveError::UnknownTeam(team))?;
    objective_probabilities_from_row(&row, bands)
}

/// Band probabilities from a rank distribution `row[rank - 1]`.
pub fn objective_probabilities_from_row(row: &[f64], bands: &BandSet) -> Result<ObjectiveProbabilities, ObjectiveError> {
    if row.len() != bands.n_teams() {
        return Err(ObjectiveError::Shape { expected: bands.n_teams(), found: row.len() });
    }
    let p: Vec<f64> = bands.bands().iter().map(|b| row[b.lo - 1..b.hi].iter().sum()).collect();
    let total: f64 = row.iter().sum();
    let residual = (total - p.iter().sum::<f64>()).max(0.0);
    Ok(ObjectiveProbabilities { ids: bands.bands().iter().map(|b| b.id).collect(), p, residual })
}

/// Objective chosen for one week.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapObjective {
    pub id: ObjectiveId,
    /// All the mass sits in the failure region.
    pub at_risk: bool,
}

/// The band with the largest probability. Ties go to the more ambitious
/// band; the residual is never chosen. With no mass on any band the least
/// ambitious band is returned flagged as at risk.
pub fn map_objective(probs: &ObjectiveProbabilities) -> MapObjective {
    let mut best: Option<usize> = None;
    for (k, &p) in probs.p.iter().enumerate() {
        if p > 0.0 && best.map_or(true, |b| p > probs.p[b]) {
            best = Some(k);
        }
    }
    match best {
        Some(k) => MapObjective { id: probs.ids[k], at_risk: false },
        None => MapObjective { id: *probs.ids.last().expect("band sets are never empty"), at_risk: true },
    }
}

/// Finishing inside the band or above it meets the objective.
pub fn objective_met(band: &ObjectiveBand, final_rank: usize) -> bool {
    final_rank <= band.hi
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FluentObjective {
    pub week: usize,
    pub objective: ObjectiveId,
    pub at_risk: bool,
}

/// Percentage of teams whose objective for each week was met by their
/// final rank. `weekly[week][team]` holds the objective set that week.
pub fn objective_accuracy_curve(
    weekly: &[Vec<ObjectiveId>],
    final_ranks: &[usize],
    bands: &BandSet,
) -> Result<Vec<f64>, ObjectiveError> {
    weekly
        .iter()
        .map(|objectives| {
            if objectives.len() != final_ranks.len() {
                return Err(ObjectiveError::Shape { expected: final_ranks.len(), found: objectives.len() });
            }
            let mut met = 0;
            for (&id, &rank) in objectives.iter().zip(final_ranks) {
                let band = bands.band(id).ok_or_else(|| ObjectiveError::InvalidBands(format!("{id} is not in the band set")))?;
                if objective_met(band, rank) {
                    met += 1;
                }
            }
            Ok(100.0 * met as f64 / final_ranks.len() as f64)
        })
        .collect()
}

/// One row of an objective trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow<'a> {
    pub week: usize,
    pub team_id: &'a str,
    pub objective: MapObjective,
    pub probs: &'a ObjectiveProbabilities,
}

/// `week,team_id,objective,p_o1,p_o2,p_o3,p_o4,p_o5,residual`.
pub fn write_trace_csv<'a, W: io::Write>(mut w: W, rows: impl IntoIterator<Item = TraceRow<'a>>) -> io::Result<()> {
    writeln!(w, "week,team_id,objective,p_o1,p_o2,p_o3,p_o4,p_o5,residual")?;
    for r in rows {
        write!(w, "{},{},{}", r.week, r.team_id, r.objective.id)?;
        for id in ObjectiveId::ALL {
            write!(w, ",{}", r.probs.get(id))?;
        }
        writeln!(w, ",{}", r.probs.residual)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Bar heights of the example finishing-position histogram, ranks 1-20.
    const EXAMPLE_BARS: [f64; 20] = [0., 0., 0., 0., 1., 1., 2., 3., 6., 8., 11., 14., 17., 21., 20., 13., 7., 5., 3., 2.];

    fn bands() -> BandSet {
        default_bands(20).unwrap()
    }

    fn probs(p: [f64; 5]) -> ObjectiveProbabilities {
        ObjectiveProbabilities { ids: ObjectiveId::ALL.to_vec(), p: p.to_vec(), residual: 1.0 - p.iter().sum::<f64>() }
    }

    #[test]
    fn default_band_intervals() {
        let b = bands();
        let o2 = b.band(ObjectiveId::O2).unwrap();
        assert_eq!((o2.lo, o2.hi), (2, 4));
        assert_eq!(b.band(ObjectiveId::O5).unwrap().hi, 17);
        for rank in 1..=17 {
            assert!(b.band_of_rank(rank).is_some());
        }
        for rank in 18..=20 {
            assert_eq!(b.band_of_rank(rank), None);
        }
        assert_eq!(default_bands(18), Err(ObjectiveError::NoDefaultBands(18)));
    }

    #[test]
    fn band_validation() {
        let band = |id, lo, hi| ObjectiveBand { id, label: String::new(), lo, hi };
        assert!(BandSet::new(10, vec![band(ObjectiveId::O1, 1, 3), band(ObjectiveId::O2, 3, 5)]).is_err());
        assert!(BandSet::new(10, vec![band(ObjectiveId::O2, 1, 3), band(ObjectiveId::O1, 4, 5)]).is_err());
        assert!(BandSet::new(10, vec![band(ObjectiveId::O1, 1, 11)]).is_err());
        assert!(BandSet::new(10, vec![band(ObjectiveId::O1, 1, 1), band(ObjectiveId::O5, 2, 7)]).is_ok());
    }

    #[test]
    fn certain_champion_probabilities() {
        let mut row = vec![0.0; 20];
        row[0] = 1.0;
        let p = objective_probabilities_from_row(&row, &bands()).unwrap();
        assert_eq!(p.p, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.residual, 0.0);
    }

    #[test]
    fn uniform_row_follows_band_widths() {
        let p = objective_probabilities_from_row(&[0.05; 20], &bands()).unwrap();
        for (got, want) in p.p.iter().zip([0.05, 0.15, 0.15, 0.15, 0.35]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((p.residual - 0.15).abs() < 1e-12);
    }

    #[test]
    fn example_histogram_maps_to_survival() {
        let total: f64 = EXAMPLE_BARS.iter().sum();
        assert_eq!(total, 134.0);
        let row: Vec<f64> = EXAMPLE_BARS.iter().map(|b| b / total).collect();
        let p = objective_probabilities_from_row(&row, &bands()).unwrap();
        assert!((p.get(ObjectiveId::O5) - 103.0 / 134.0).abs() < 1e-12);
        assert_eq!(map_objective(&p), MapObjective { id: ObjectiveId::O5, at_risk: false });
    }

    #[test]
    fn map_choices() {
        assert_eq!(map_objective(&probs([0.6, 0.2, 0.1, 0.05, 0.05])).id, ObjectiveId::O1);
        assert_eq!(map_objective(&probs([0.1, 0.3, 0.3, 0.1, 0.1])).id, ObjectiveId::O2);
        let doomed = probs([0.0; 5]);
        assert_eq!(map_objective(&doomed), MapObjective { id: ObjectiveId::O5, at_risk: true });
    }

    #[test]
    fn met_means_at_or_better() {
        let b = bands();
        assert!(objective_met(b.band(ObjectiveId::O3).unwrap(), 3));
        assert!(!objective_met(b.band(ObjectiveId::O5).unwrap(), 18));
        assert!(!objective_met(b.band(ObjectiveId::O1).unwrap(), 2));
    }

    #[test]
    fn accuracy_caps_at_85_percent() {
        let b = bands();
        let ranks: Vec<usize> = (1..=20).collect();
        let survival = vec![vec![ObjectiveId::O5; 20]];
        assert_eq!(objective_accuracy_curve(&survival, &ranks, &b).unwrap(), vec![85.0]);
        // Perfect foresight: each team targets its realised band.
        let oracle: Vec<ObjectiveId> = ranks.iter().map(|&r| b.band_of_rank(r).unwrap_or(ObjectiveId::O5)).collect();
        assert_eq!(objective_accuracy_curve(&[oracle], &ranks, &b).unwrap(), vec![85.0]);
    }

    #[test]
    fn trace_csv_row() {
        let p = probs([0.0, 0.0, 0.25, 0.5, 0.25]);
        let mut out = Vec::new();
        let objective = map_objective(&p);
        write_trace_csv(&mut out, [TraceRow { week: 3, team_id: "sou", objective, probs: &p }]).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "3,sou,o4,0,0,0.25,0.5,0.25,0");
    }

    fn rank_dist() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, 20).prop_filter("some mass", |v| v.iter().sum::<f64>() > 1e-3).prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect()
        })
    }

    proptest! {
        #[test]
        fn probabilities_are_linear_in_the_distribution(a in rank_dist(), c in rank_dist(), lambda in 0.0f64..1.0) {
            let b = bands();
            let mix: Vec<f64> = a.iter().zip(&c).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect();
            let pa = objective_probabilities_from_row(&a, &b).unwrap();
            let pc = objective_probabilities_from_row(&c, &b).unwrap();
            let pm = objective_probabilities_from_row(&mix, &b).unwrap();
            for k in 0..5 {
                prop_assert!((pm.p[k] - (lambda * pa.p[k] + (1.0 - lambda) * pc.p[k])).abs() < 1e-12);
            }
            prop_assert!((pa.p.iter().sum::<f64>() + pa.residual - 1.0).abs() < 1e-9);
        }

        #[test]
        fn map_ignores_positive_scaling(a in rank_dist(), scale in 0.01f64..100.0) {
            let p = objective_probabilities_from_row(&a, &bands()).unwrap();
            let scaled = ObjectiveProbabilities { ids: p.ids.clone(), p: p.p.iter().map(|x| x * scale).collect(), residual: p.residual * scale };
            prop_assert_eq!(map_objective(&p), map_objective(&scaled));
        }

        #[test]
        fn point_mass_maps_to_its_band(rank in 1usize..=20) {
            let mut row = vec![0.0; 20];
            row[rank - 1] = 1.0;
            let m = map_objective(&objective_probabilities_from_row(&row, &bands()).unwrap());
            match bands().band_of_rank(rank) {
                Some(id) => prop_assert_eq!(m, MapObjective { id, at_risk: false }),
                None => prop_assert_eq!(m, MapObjective { id: ObjectiveId::O5, at_risk: true }),
            }
        }
    }
}
