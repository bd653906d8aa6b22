//! Horizontal bar charts of explanation weights.

use crate::explain::Explanation;

const MAX_BARS: usize = 8;
const WIDTH: f64 = 600.0;
const LABEL_WIDTH: f64 = 160.0;
const BAR_HEIGHT: f64 = 22.0;
const GAP: f64 = 6.0;
const MARGIN: f64 = 10.0;
const POSITIVE_FILL: &str = "#2b83ba";
const NEGATIVE_FILL: &str = "#d7191c";

fn escape(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            '&' => "&amp;".into(),
            '<' => "&lt;".into(),
            '>' => "&gt;".into(),
            '"' => "&quot;".into(),
            '\'' => "&apos;".into(),
            c => c.to_string(),
        })
        .collect()
}

/// One bar per feature for the largest `|display_weight|` entries (at most
/// 8), scaled so the largest spans its half of the plot. Mixed signs put
/// the zero axis in the middle; otherwise bars grow from the plot edge.
pub fn render_svg_bars(explanation: &Explanation) -> String {
    let mut bars: Vec<(&str, f64)> = explanation
        .names
        .iter()
        .map(String::as_str)
        .zip(explanation.display_weights.iter().copied())
        .filter(|(_, w)| *w != 0.0)
        .collect();
    bars.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    bars.truncate(MAX_BARS);
    let plot = WIDTH - LABEL_WIDTH - 2.0 * MARGIN;
    let left = LABEL_WIDTH + MARGIN;

    if bars.is_empty() {
        let height = BAR_HEIGHT + 2.0 * MARGIN;
        return format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\">\n\
             <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">no features</text>\n\
             </svg>\n",
            WIDTH / 2.0,
            MARGIN + BAR_HEIGHT * 0.7,
        );
    }

    let has_pos = bars.iter().any(|b| b.1 > 0.0);
    let has_neg = bars.iter().any(|b| b.1 < 0.0);
    let (axis, span) = match (has_pos, has_neg) {
        (true, true) => (left + plot / 2.0, plot / 2.0),
        (false, true) => (left + plot, plot),
        _ => (left, plot),
    };
    let max = bars.iter().map(|b| b.1.abs()).fold(0.0, f64::max);
    let height = 2.0 * MARGIN + bars.len() as f64 * (BAR_HEIGHT + GAP) - GAP;

    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\">\n<title>{}</title>\n",
        escape(&format!("{} ({})", explanation.instance_id, explanation.system))
    );
    for (i, (name, w)) in bars.iter().enumerate() {
        let y = MARGIN + i as f64 * (BAR_HEIGHT + GAP);
        let len = w.abs() / max * span;
        let x = if *w < 0.0 { axis - len } else { axis };
        let fill = if *w < 0.0 { NEGATIVE_FILL } else { POSITIVE_FILL };
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            LABEL_WIDTH,
            y + BAR_HEIGHT * 0.7,
            escape(name)
        ));
        out.push_str(&format!(
            "<rect x=\"{x:.2}\" y=\"{y:.1}\" width=\"{len:.2}\" height=\"{BAR_HEIGHT}\" fill=\"{fill}\"><title>{:.4}</title></rect>\n",
            w
        ));
    }
    out.push_str(&format!(
        "<line x1=\"{axis:.2}\" y1=\"{MARGIN}\" x2=\"{axis:.2}\" y2=\"{:.1}\" stroke=\"#333\"/>\n</svg>\n",
        height - MARGIN
    ));
    out
}
