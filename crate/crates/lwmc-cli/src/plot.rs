//! Minimal SVG scatter output: every weighted point in black with opacity
//! proportional to its weight, the propagating chain in red on top.

use lwmc::core::ChainOutput;
use lwmc::Error;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 40.0;

/// Render the first two coordinates of a chain as an SVG scatter plot.
/// Output bytes are a deterministic function of the chain.
pub fn render_svg(chain: &ChainOutput) -> Result<String, Error> {
    if chain.records.is_empty() {
        return Err(Error::EmptyChain);
    }
    if chain.dim() < 2 {
        return Err(Error::Config(
            "plot requires a chain with dimension >= 2".into(),
        ));
    }

    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    let mut w_max = 0.0f64;
    for record in &chain.records {
        for point in &record.points {
            for k in 0..2 {
                min[k] = min[k].min(point.state[k]);
                max[k] = max[k].max(point.state[k]);
            }
            w_max = w_max.max(point.weight);
        }
    }
    for k in 0..2 {
        if min[k] == max[k] {
            min[k] -= 0.5;
            max[k] += 0.5;
        }
    }
    let scale = |v: f64, k: usize| -> f64 {
        let t = (v - min[k]) / (max[k] - min[k]);
        // flip y so larger values sit higher
        if k == 0 {
            MARGIN + t * (SIZE - 2.0 * MARGIN)
        } else {
            SIZE - MARGIN - t * (SIZE - 2.0 * MARGIN)
        }
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {SIZE} {SIZE}\" \
         width=\"{SIZE}\" height=\"{SIZE}\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{SIZE}\" height=\"{SIZE}\" fill=\"white\"/>\n"
    ));
    for record in &chain.records {
        for point in &record.points {
            let opacity = if w_max > 0.0 { point.weight / w_max } else { 0.0 };
            svg.push_str(&format!(
                "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"2\" fill=\"black\" fill-opacity=\"{:.4}\"/>\n",
                scale(point.state[0], 0),
                scale(point.state[1], 1),
                opacity
            ));
        }
    }
    for state in chain.propagating_states() {
        svg.push_str(&format!(
            "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"1.6\" fill=\"red\"/>\n",
            scale(state[0], 0),
            scale(state[1], 1)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
