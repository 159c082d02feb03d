//! Central finite differences along a direction, with one Richardson
//! extrapolation step. Each stencil has O(h^2) truncation error, so the
//! extrapolated value is O(h^4).

use crate::graph::{Graph, GraphError};
use crate::tensor::Tensor;

use super::oracle::eval_function_graph;

fn eval_offset(graph: &Graph, x0: &Tensor, v: &Tensor, t: f64) -> Result<Vec<f64>, GraphError> {
    let shifted: Vec<f64> = x0
        .data()
        .iter()
        .zip(v.data())
        .map(|(&x, &d)| x + t * d)
        .collect();
    eval_function_graph(graph, &shifted)
}

fn stencil(graph: &Graph, x0: &Tensor, v: &Tensor, order: usize, h: f64) -> Result<Vec<f64>, GraphError> {
    let g = |t: f64| eval_offset(graph, x0, v, t);
    let combine = |terms: Vec<(f64, Vec<f64>)>, denom: f64| -> Vec<f64> {
        let n = terms[0].1.len();
        (0..n)
            .map(|i| terms.iter().map(|(c, v)| c * v[i]).sum::<f64>() / denom)
            .collect()
    };
    Ok(match order {
        1 => combine(vec![(1.0, g(h)?), (-1.0, g(-h)?)], 2.0 * h),
        2 => combine(
            vec![(1.0, g(h)?), (-2.0, g(0.0)?), (1.0, g(-h)?)],
            h * h,
        ),
        3 => combine(
            vec![
                (1.0, g(2.0 * h)?),
                (-2.0, g(h)?),
                (2.0, g(-h)?),
                (-1.0, g(-2.0 * h)?),
            ],
            2.0 * h * h * h,
        ),
        4 => combine(
            vec![
                (1.0, g(2.0 * h)?),
                (-4.0, g(h)?),
                (6.0, g(0.0)?),
                (-4.0, g(-h)?),
                (1.0, g(-2.0 * h)?),
            ],
            h * h * h * h,
        ),
        _ => {
            return Err(GraphError::Unsupported(format!(
                "finite differences of order {order} not supported"
            )))
        }
    })
}

/// k-th directional derivative of the graph's output along `v` at `x0`.
pub fn finite_difference(
    graph: &Graph,
    x0: &Tensor,
    v: &Tensor,
    order: usize,
) -> Result<Tensor, GraphError> {
    let h = 1e-2;
    let coarse = stencil(graph, x0, v, order, h)?;
    let fine = stencil(graph, x0, v, order, h / 2.0)?;
    let data: Vec<f64> = coarse
        .iter()
        .zip(&fine)
        .map(|(&c, &f)| (4.0 * f - c) / 3.0)
        .collect();
    Ok(Tensor::vector(data))
}
