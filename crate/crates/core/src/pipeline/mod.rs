//! Data preparation: raster preprocessing, labeling, augmentation,
//! undersampling, partitioning and a synthetic magnetogram generator.
//!
//! Preprocessing order is fixed: [`clip_flux`] → [`zero_noise`] →
//! [`apply_bitmap`] → [`fit_512`] → [`scale_0_255`].

mod augment;
mod balance;
mod dataset;
mod label;
mod prepare;
mod preprocess;
mod raster;
mod sample;
mod synth;

pub use augment::{
    augment, augment_image, flip_horizontal, flip_vertical, gaussian_blur_3x3, gaussian_kernel_3x3,
    AugmentKind,
};
pub use balance::{
    balance_training, balance_training_with, balanced_counts, class_counts, undersample_count,
    BalancePlan, AUGMENTATION_FACTOR, FQ_RETENTION, WEAK_FLARE_RETENTION,
};
pub use dataset::{
    partition_samples, read_dataset, read_manifest, write_dataset, ManifestRow, StoredSample,
    IMAGE_DIR, MANIFEST_FILE,
};
pub use label::{
    assign_partitions, default_role, label_window, prediction_window, Partition, SplitAssignment,
    SplitRole,
};
pub use prepare::{prepare_splits, PreparedSplits};
pub use preprocess::{
    apply_bitmap, clip_flux, fit_512, fit_window, gauss_span_to_scaled, gauss_to_scaled,
    max_flux_window, pad_to, preprocess, preprocess_to, scale_0_255, zero_noise, SummedAreaTable,
    CLIP_GAUSS, NOISE_FLOOR_GAUSS, PROCESSED_SIZE, SCALED_MAX,
};
pub use raster::{Bitmap, Raster};
pub use sample::{rng_for, LabeledSample};
pub use synth::{synth_dataset, synth_dataset_with, synth_raw, SynthSpec, DEFAULT_SYNTH_SIZE};
