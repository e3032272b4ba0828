//! Per-frame work counters and their text/JSON forms.
//!
//! Both forms list the same keys in the same order. The JSON object also
//! carries `format_version`; it changes whenever a key is renamed or removed.

use crate::raster::ClassCounts;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FrameStats {
    /// Gaussians run through projection (counted once per pass).
    pub gaussians_preprocessed: u64,
    /// Splats that survived projection.
    pub splats_visible: u64,
    /// Pair slots reserved from exact visible-tile counts.
    pub pairs_instantiated: u64,
    /// Pairs left after the per-tile alpha cull.
    pub pairs_after_exact_cull: u64,
    /// Pairs streamed by the shading blocks: per 16-px subtile at full
    /// resolution, per 32-px tile in the periphery.
    pub pairs_subtile: u64,
    pub tiles: ClassCounts,
    /// Splat alpha evaluations used for blending.
    pub per_pixel_samples: u64,
    /// Fragments that reached the resort window after a farther one had
    /// already been blended.
    pub resort_overflows: u64,
}

impl FrameStats {
    /// Adds the work counters of another pass. Tile classes are left alone.
    pub fn add(&mut self, other: &FrameStats) {
        self.gaussians_preprocessed += other.gaussians_preprocessed;
        self.splats_visible += other.splats_visible;
        self.pairs_instantiated += other.pairs_instantiated;
        self.pairs_after_exact_cull += other.pairs_after_exact_cull;
        self.pairs_subtile += other.pairs_subtile;
        self.per_pixel_samples += other.per_pixel_samples;
        self.resort_overflows += other.resort_overflows;
    }

    pub fn entries(&self) -> Vec<(&'static str, u64)> {
        vec![
            ("gaussians_preprocessed", self.gaussians_preprocessed),
            ("splats_visible", self.splats_visible),
            ("pairs_instantiated", self.pairs_instantiated),
            ("pairs_after_exact_cull", self.pairs_after_exact_cull),
            ("pairs_subtile", self.pairs_subtile),
            ("tiles_total", self.tiles.total()),
            ("tiles_high_res", self.tiles.high_res),
            ("tiles_low_res", self.tiles.low_res),
            ("tiles_hybrid", self.tiles.hybrid),
            ("tiles_invisible", self.tiles.invisible),
            ("per_pixel_samples", self.per_pixel_samples),
            ("resort_overflows", self.resort_overflows),
        ]
    }

    pub fn to_text(&self) -> String {
        self.entries().iter().map(|(k, v)| format!("{k}: {v}\n")).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        map.insert("format_version".into(), FORMAT_VERSION.into());
        for (k, v) in self.entries() {
            map.insert(k.into(), v.into());
        }
        serde_json::Value::Object(map)
    }
}
