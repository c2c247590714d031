use super::{Graph, NodeId, ParamSet};
use crate::error::{Error, Result};

/// Outcome for one parameter tensor.
#[derive(Clone, Debug)]
pub struct ParamCheck {
    pub name: String,
    pub max_rel_error: f64,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
    pub max_rel_error: f64,
    pub passed: bool,
}

/// Denominator floor so that entries with vanishing gradients are compared
/// on an absolute scale. Central differences with h near 1e-5 carry about
/// 1e-10 of rounding noise, well under this.
const REL_FLOOR: f64 = 1e-6;

/// Compares the analytic gradients of `loss_fn` against central finite
/// differences with step `h`. `loss_fn` rebuilds the forward graph from the
/// current parameter values and returns it with its scalar loss node.
pub fn gradient_check<F>(params: &mut ParamSet, loss_fn: F, h: f64, tolerance: f64) -> Result<GradCheckReport>
where
    F: Fn(&ParamSet) -> Result<(Graph, NodeId)>,
{
    params.zero_grad();
    let (g, loss) = loss_fn(params)?;
    g.backward(loss, params)?;
    let analytic: Vec<Vec<f64>> = params.iter().map(|p| p.grad.data().to_vec()).collect();

    let eval = |ps: &ParamSet| -> Result<f64> {
        let (g, loss) = loss_fn(ps)?;
        let v = g.value(loss).data()[0];
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numeric(format!("non-finite loss {v}")))
        }
    };

    let mut report = Vec::with_capacity(params.len());
    let ids: Vec<_> = params.ids().collect();
    for (pi, id) in ids.into_iter().enumerate() {
        let mut worst = 0.0f64;
        for (i, &a) in analytic[pi].iter().enumerate() {
            let orig = params.get(id).value.data()[i];
            params.get_mut(id).value.data_mut()[i] = orig + h;
            let up = eval(params)?;
            params.get_mut(id).value.data_mut()[i] = orig - h;
            let down = eval(params)?;
            params.get_mut(id).value.data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            worst = worst.max(rel);
        }
        report.push(ParamCheck {
            name: params.get(id).name.clone(),
            max_rel_error: worst,
            passed: worst <= tolerance,
        });
    }
    params.zero_grad();
    let max_rel_error = report.iter().map(|p| p.max_rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        passed: report.iter().all(|p| p.passed),
        params: report,
        max_rel_error,
    })
}
