#![allow(dead_code)]

pub mod tables;

use std::path::PathBuf;

use ndarray::Array2;
use xad_core::dataset::{Label, RecordMeta};
use xad_core::mask::Mask;
use xad_core::preprocess::{OfflineRecord, Step};

/// Full-frame record with the given pixels, one patient per index.
pub fn record(index: usize, pixels: Array2<f32>, label: Label) -> OfflineRecord {
    let patient = format!("p{index:03}");
    OfflineRecord {
        meta: RecordMeta {
            image_id: format!("{patient}_img"),
            patient_id: patient.clone(),
            study_id: format!("{patient}/s1"),
            label,
            source_path: PathBuf::from(format!("{patient}.png")),
            channels: 1,
        },
        mask: Mask::full(pixels.dim()),
        pixels,
        provenance: vec![Step::Load { channels: 1 }],
    }
}

/// Smooth negative images with a bright disc at varying positions.
pub fn blobs(n: usize, size: usize) -> Vec<OfflineRecord> {
    (0..n)
        .map(|i| {
            let (cy, cx) = (size as f32 * (0.35 + 0.03 * (i % 10) as f32), size as f32 * (0.4 + 0.02 * (i % 7) as f32));
            let px = Array2::from_shape_fn((size, size), |(r, c)| {
                let d = ((r as f32 - cy).powi(2) + (c as f32 - cx).powi(2)).sqrt() / size as f32;
                0.2 + 0.6 * (-d * d * 20.0).exp()
            });
            record(i, px, Label::Negative)
        })
        .collect()
}
