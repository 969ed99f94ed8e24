pub mod geom;
pub mod mask_ops;
pub mod metrics;
pub mod ordering;
pub mod pipeline;
pub mod raster;
pub mod surgery;
pub mod svg;
pub mod synth;
pub mod trace;
