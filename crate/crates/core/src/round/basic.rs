use super::{final_assignment, move_lp_group, IntegralSolution, MoveSolution, MovingCost};
use crate::basiclp::FractionalSolution;
use crate::cluster::Clustering;
use crate::error::Result;
use crate::instance::Instance;
use crate::tol;

#[derive(Debug, Clone, PartialEq)]
pub struct BasicRound {
    pub solution: IntegralSolution,
    pub moving: MovingCost,
    /// Demand placement per representative, in `reps` order.
    pub moves: Vec<MoveSolution>,
}

/// Moves all demand to the representatives, spreads it back over each
/// Voronoi cell with a vertex solution of the cell LP, opens every facility
/// that receives demand, and assigns clients optimally.
pub fn round_basic(
    inst: &Instance,
    frac: &FractionalSolution,
    clustering: &Clustering,
) -> Result<BasicRound> {
    let mut open = vec![0u32; inst.n_facilities()];
    let mut moving = MovingCost { to_facilities: frac.lp_value, ..MovingCost::default() };
    let mut moves = Vec::with_capacity(clustering.reps.len());
    for (&v, u) in clustering.reps.iter().zip(&clustering.members) {
        let caps: Vec<u32> = u.iter().map(|&i| inst.capacity(i)).collect();
        let dists: Vec<f64> = u.iter().map(|&i| inst.fc(i, v)).collect();
        let witness: Vec<f64> = u.iter().map(|&i| frac.x_from(i)).collect();
        let demand = frac.x_mass(u);
        let m = move_lp_group(&caps, &dists, demand, 0, frac.y_of(u), &witness)?;
        moving.to_centers += witness.iter().zip(&dists).map(|(a, d)| a * d).sum::<f64>();
        moving.from_centers += m.objective;
        for (&i, &a) in u.iter().zip(&m.alpha) {
            if a > tol::DEMAND {
                open[i] = 1;
            }
        }
        moves.push(m);
    }
    let (assignment, _) = final_assignment(inst, &open, &vec![None; inst.n_clients()])?;
    let solution = IntegralSolution::new(inst, open, assignment);
    solution.validate(inst)?;
    Ok(BasicRound { solution, moving, moves })
}
