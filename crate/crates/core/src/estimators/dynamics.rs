use crate::error::{KoopError, Result};
use crate::numerics::Matrix;

/// A discrete-time map advanced one sample at a time.
///
/// Implemented by the fitted models, their POD reductions, and the reference
/// simulators, so analysis routines treat all of them alike. `encode`/`decode`
/// translate between the caller-facing state (e.g. a full delay state) and the
/// internal coordinates the map iterates (e.g. POD coefficients).
pub trait Dynamics: Sync {
    /// Dimension of the internal state iterated by [`Dynamics::step`].
    fn state_dim(&self) -> usize;

    fn input_dim(&self) -> usize;

    /// Sample interval in model time units.
    fn dt(&self) -> f64;

    fn step(&self, state: &[f64], input: &[f64], next: &mut [f64]);

    /// Observable `k` of an internal state.
    fn observe(&self, state: &[f64], k: usize) -> f64 {
        state[k]
    }

    /// Dimension of the caller-facing state.
    fn full_dim(&self) -> usize {
        self.state_dim()
    }

    fn encode(&self, full: &[f64]) -> Vec<f64> {
        full.to_vec()
    }

    fn decode(&self, state: &[f64]) -> Vec<f64> {
        state.to_vec()
    }
}

/// States visited by a rollout; stops early if the state blows up.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// full_dim × (steps completed + 1), starting with the initial state.
    pub states: Matrix,
    /// Step index whose result was non-finite, if any.
    pub diverged_at: Option<usize>,
}

impl Trajectory {
    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    /// Rows `0..m` of every state: the observables.
    pub fn observables(&self, m: usize) -> Matrix {
        self.states.row_block(0, m)
    }
}

pub(crate) fn check_inputs(
    model: &impl Dynamics,
    inputs: Option<&Matrix>,
    steps: usize,
) -> Result<()> {
    match (model.input_dim(), inputs) {
        (0, None) => Ok(()),
        (0, Some(_)) => Err(KoopError::invalid(
            "autonomous model given an input sequence",
        )),
        (_, None) if steps == 0 => Ok(()),
        (_, None) => Err(KoopError::MissingInputs),
        (q, Some(u)) => {
            if u.rows() != q {
                return Err(KoopError::dims(format!(
                    "input sequence has {} rows, model expects {q}",
                    u.rows()
                )));
            }
            if u.cols() < steps {
                return Err(KoopError::dims(format!(
                    "{steps} steps need {steps} input columns, got {}",
                    u.cols()
                )));
            }
            Ok(())
        }
    }
}

/// Iterates `model` for `steps` steps from the caller-facing state `x0`.
///
/// Column `n` of the result is the decoded state after `n` steps. Divergence
/// is reported through [`Trajectory::diverged_at`] with the finite prefix kept.
pub fn rollout(
    model: &impl Dynamics,
    x0: &[f64],
    inputs: Option<&Matrix>,
    steps: usize,
) -> Result<Trajectory> {
    if x0.len() != model.full_dim() {
        return Err(KoopError::dims(format!(
            "initial state has {} entries, model expects {}",
            x0.len(),
            model.full_dim()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(KoopError::NonFinite("initial state".into()));
    }
    check_inputs(model, inputs, steps)?;
    let q = model.input_dim();
    let mut columns = Vec::with_capacity(steps + 1);
    columns.push(x0.to_vec());
    let mut state = model.encode(x0);
    let mut next = vec![0.0; state.len()];
    let zero: Vec<f64> = Vec::new();
    let mut diverged_at = None;
    for n in 0..steps {
        let u = match inputs {
            Some(u) if q > 0 => u.col(n),
            _ => zero.as_slice(),
        };
        model.step(&state, u, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            diverged_at = Some(n + 1);
            break;
        }
        std::mem::swap(&mut state, &mut next);
        columns.push(model.decode(&state));
    }
    Ok(Trajectory {
        states: Matrix::from_columns(&columns)?,
        diverged_at,
    })
}

/// Runs `steps` steps under a constant input without storing the path,
/// returning the final internal state, or `None` on divergence.
pub fn advance(
    model: &impl Dynamics,
    state: &[f64],
    input: &[f64],
    steps: usize,
) -> Option<Vec<f64>> {
    let mut s = state.to_vec();
    let mut next = vec![0.0; s.len()];
    for _ in 0..steps {
        model.step(&s, input, &mut next);
        if next.iter().any(|v| !v.is_finite()) {
            return None;
        }
        std::mem::swap(&mut s, &mut next);
    }
    Some(s)
}
