use std::cell::Cell;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::plot::PlotSeries;
use crate::error::{Error, Result};
use crate::sequence::KeypointSequence;

/// Monotonic time source.
pub trait Clock {
    fn now(&self) -> Duration;
}

#[derive(Debug, Clone)]
pub struct SystemClock {
    start: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self { start: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.start.elapsed()
    }
}

/// A clock that only moves when told to.
#[derive(Debug, Default)]
pub struct ManualClock {
    now: Cell<Duration>,
}

impl ManualClock {
    pub fn advance(&self, by: Duration) {
        self.now.set(self.now.get() + by);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Duration {
        self.now.get()
    }
}

/// Anything with a frame count that can be benchmarked.
pub trait Clip {
    fn frame_count(&self) -> usize;
}

impl Clip for KeypointSequence {
    fn frame_count(&self) -> usize {
        self.frames()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClipTiming {
    pub frames: usize,
    pub seconds: f64,
    pub fps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub clips: Vec<ClipTiming>,
    pub total_frames: usize,
    pub total_seconds: f64,
    /// Total frames over total time, not the mean of per-clip rates.
    pub aggregate_fps: f64,
}

impl BenchmarkReport {
    pub fn render(&self) -> String {
        let mut out = String::from("clip\tframes\tseconds\tfps\n");
        for (i, c) in self.clips.iter().enumerate() {
            out += &format!("{i}\t{}\t{:.6}\t{:.3}\n", c.frames, c.seconds, c.fps);
        }
        out += &format!(
            "aggregate\t{}\t{:.6}\t{:.3}\n",
            self.total_frames, self.total_seconds, self.aggregate_fps
        );
        out
    }

    pub fn plot(&self) -> Vec<PlotSeries> {
        vec![PlotSeries::new(
            "clip_fps",
            self.clips.iter().map(|c| c.frames as f64).collect(),
            self.clips.iter().map(|c| c.fps).collect(),
        )]
    }
}

/// Runs `processor` on one clip at a time and times each run.
pub fn benchmark_runtime<C: Clip>(
    clips: &[C],
    mut processor: impl FnMut(&C) -> Result<()>,
    clock: &dyn Clock,
) -> Result<BenchmarkReport> {
    if clips.is_empty() {
        return Err(Error::contract("nothing to benchmark"));
    }
    let mut timings = Vec::with_capacity(clips.len());
    for clip in clips {
        let start = clock.now();
        processor(clip)?;
        let seconds = (clock.now() - start).as_secs_f64();
        let frames = clip.frame_count();
        timings.push(ClipTiming {
            frames,
            seconds,
            fps: frames as f64 / seconds,
        });
    }
    let total_frames = timings.iter().map(|c| c.frames).sum();
    let total_seconds = timings.iter().map(|c| c.seconds).sum::<f64>();
    Ok(BenchmarkReport {
        clips: timings,
        total_frames,
        total_seconds,
        aggregate_fps: total_frames as f64 / total_seconds,
    })
}
