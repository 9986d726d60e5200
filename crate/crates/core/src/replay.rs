//! Offline SVG rendering of rollout logs, one frame per logged step.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::physics::{PhysicsParams, Score};
use crate::rollout::{EpisodeLog, RolloutError};

#[derive(Debug, Clone, PartialEq)]
pub struct ReplaySummary {
    pub frames: Vec<PathBuf>,
    pub final_score: Score,
}

fn frame_name(i: usize) -> String {
    format!("frame_{i:05}.svg")
}

/// Render row `row` of `log` as a standalone SVG document.
pub fn render_frame(log: &EpisodeLog, row: usize, params: &PhysicsParams) -> Result<String, RolloutError> {
    let values = &log.rows[row];
    let f = &params.field;
    let (hx, hy, pd, gw) = (f.play_half_length, f.half_width, f.pocket_depth, f.goal_half_width);
    let margin = 5.0;
    let (w, h) = (2.0 * (hx + pd + margin), 2.0 * (hy + margin) + 12.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {w} {h}" width="{}" height="{}">"#,
        -(hx + pd + margin),
        -(hy + margin) - 12.0,
        (w * 4.0).round(),
        (h * 4.0).round()
    );
    let _ = writeln!(s, r##"<rect x="{}" y="{}" width="{w}" height="{h}" fill="#202020"/>"##, -(hx + pd + margin), -(hy + margin) - 12.0);
    let step = values[log.column("step")?];
    let score = Score { blue: values[log.column("score_blue")?] as i32, yellow: values[log.column("score_yellow")?] as i32 };
    let _ = writeln!(
        s,
        r##"<text x="0" y="{}" fill="#ffffff" font-family="monospace" font-size="7" text-anchor="middle">blue {} : {} yellow   step {}</text>"##,
        -hy - margin - 3.0,
        score.blue,
        score.yellow,
        step
    );
    // World frame has y up.
    let _ = writeln!(s, r#"<g transform="scale(1,-1)">"#);
    let _ = writeln!(s, r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#1d6b2f" stroke="#ffffff" stroke-width="0.6"/>"##, -hx, -hy, 2.0 * hx, 2.0 * hy);
    for sign in [-1.0, 1.0] {
        let x = if sign < 0.0 { -hx - pd } else { hx };
        let _ = writeln!(s, r##"<rect x="{x}" y="{}" width="{pd}" height="{}" fill="#1d6b2f" stroke="#ffffff" stroke-width="0.6"/>"##, -gw, 2.0 * gw);
    }
    let _ = writeln!(s, r##"<line x1="0" y1="{}" x2="0" y2="{hy}" stroke="#ffffff" stroke-width="0.4"/>"##, -hy);
    let _ = writeln!(s, r##"<circle cx="0" cy="0" r="20" fill="none" stroke="#ffffff" stroke-width="0.4"/>"##);
    let r = params.robot.body_radius;
    for (prefix, col) in log.robots() {
        let (x, y, theta) = (values[col], values[col + 1], values[col + 2]);
        let fill = if prefix.starts_with('b') { "#2b6cd6" } else { "#e0c020" };
        let _ = writeln!(
            s,
            r##"<g transform="translate({x:.3},{y:.3}) rotate({:.3})"><rect x="{}" y="{}" width="{}" height="{}" fill="{fill}" stroke="#000000" stroke-width="0.4"/><line x1="0" y1="0" x2="{r}" y2="0" stroke="#ffffff" stroke-width="0.8"/></g>"##,
            theta.to_degrees(),
            -r * 0.8,
            -r * 0.8,
            r * 1.6,
            r * 1.6
        );
    }
    let (bx, by) = (values[log.column("ball_x")?], values[log.column("ball_y")?]);
    let _ = writeln!(s, r##"<circle cx="{bx:.3}" cy="{by:.3}" r="{}" fill="#ff7a00"/>"##, params.ball.radius);
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}

/// Render every `every`-th row of the log at `log_path` into `out_dir`.
pub fn replay(log_path: &Path, out_dir: &Path, every: usize, params: &PhysicsParams) -> Result<ReplaySummary, RolloutError> {
    let log = EpisodeLog::load(log_path)?;
    fs::create_dir_all(out_dir).map_err(|e| RolloutError::Io { path: out_dir.display().to_string(), source: e })?;
    let mut frames = Vec::new();
    for (i, row) in (0..log.rows.len()).step_by(every.max(1)).enumerate() {
        let path = out_dir.join(frame_name(i));
        fs::write(&path, render_frame(&log, row, params)?)
            .map_err(|e| RolloutError::Io { path: path.display().to_string(), source: e })?;
        frames.push(path);
    }
    Ok(ReplaySummary { frames, final_score: log.final_score()? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvConfig, EpisodeConfig};
    use crate::policy::AgentKind;
    use crate::rollout::{run_episode, RolloutConfig};

    #[test]
    fn ten_step_log_gives_ten_frames() {
        let env = EnvConfig { episode: EpisodeConfig { max_duration: 10.0 / 30.0, ..Default::default() }, ..Default::default() };
        let (log, _) = run_episode(&env, &RolloutConfig { agent: AgentKind::Chase, ..Default::default() }, 0).unwrap();
        assert_eq!(log.rows.len(), 10);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        log.write(fs::File::create(&path).unwrap()).unwrap();
        let summary = replay(&path, &dir.path().join("frames"), 1, &env.physics).unwrap();
        assert_eq!(summary.frames.len(), 10);
        let first = fs::read_to_string(&summary.frames[0]).unwrap();
        assert!(first.starts_with("<svg") && first.trim_end().ends_with("</svg>"));
        assert_eq!(first.matches("<rect").count(), 6);
        assert!(first.contains("blue 0 : 0 yellow"));
    }
}
