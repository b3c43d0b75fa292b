//! Layer tables of the paper-scale architectures, transcribed row by row.
//! Each block starts with `# <model> <sub-network>`; rows are `label | shape`.
//! The VAE bottleneck is split over the `encoder` (flattening), the two heads
//! and the `decoder` (FC and reshape); the sampling row has no layer.

#![allow(dead_code)]

pub const TABLES: &str = "
# CAE encoder
(3, 3) | (512, 512, 16)
(4, 4) | (256, 256, 32)
(3, 3) | (256, 256, 32)
(4, 4) | (128, 128, 64)
(3, 3) | (128, 128, 64)
(4, 4) | (64, 64, 128)
(3, 3) | (64, 64, 128)
(4, 4) | (32, 32, 256)
(3, 3) | (32, 32, 256)
(4, 4) | (16, 16, 512)
# CAE decoder
(4, 4) | (32, 32, 256)
(4, 4) | (64, 64, 128)
(4, 4) | (128, 128, 64)
(4, 4) | (256, 256, 32)
(4, 4) | (512, 512, 16)
(3, 3) | (512, 512, 1)
# VAE encoder
(4, 4) | (255, 255, 8)
(4, 4) | (126, 126, 16)
(4, 4) | (62, 62, 32)
(4, 4) | (30, 30, 64)
(4, 4) | (14, 14, 128)
(4, 4) | (6, 6, 256)
(4, 4) | (2, 2, 512)
reshape | (2048,)
# VAE mu
FC | (1024,)
# VAE sigma
FC | (1024,)
# VAE decoder
FC | (2048,)
reshape | (2, 2, 512)
(4, 4) | (6, 6, 256)
(4, 4) | (14, 14, 128)
(4, 4) | (30, 30, 64)
(4, 4) | (62, 62, 32)
(4, 4) | (126, 126, 16)
(4, 4) | (254, 254, 8)
(6, 6) | (512, 512, 1)
# DCGAN generator
(4, 4) | (4, 4, 1024)
(4, 4) | (8, 8, 512)
(4, 4) | (16, 16, 256)
(4, 4) | (32, 32, 128)
(4, 4) | (64, 64, 64)
(4, 4) | (128, 128, 32)
(4, 4) | (256, 256, 16)
(4, 4) | (512, 512, 1)
# DCGAN discriminator
(4, 4) | (256, 256, 4)
(4, 4) | (128, 128, 8)
(4, 4) | (64, 64, 16)
(4, 4) | (32, 32, 32)
(4, 4) | (16, 16, 64)
(4, 4) | (8, 8, 128)
(4, 4) | (4, 4, 256)
(4, 4) | (1, 1, 512)
minibatch discrimination | (1, 1, 528)
FC | (1,)
# BiGAN generator
(4, 4) | (4, 4, 1024)
(4, 4) | (8, 8, 512)
(4, 4) | (16, 16, 256)
(4, 4)† | (32, 32, 128)
(4, 4)† | (64, 64, 64)
(4, 4) | (128, 128, 1)
# BiGAN encoder
(4, 4) | (64, 64, 64)
(4, 4) | (32, 32, 128)
(4, 4) | (16, 16, 256)
(4, 4)† | (8, 8, 512)
(4, 4)† | (4, 4, 1024)
(4, 4) | (1, 1, 200)
# BiGAN disc_image
(4, 4) | (64, 64, 64)
(4, 4) | (32, 32, 128)
(4, 4) | (16, 16, 256)
(4, 4)† | (8, 8, 512)
(4, 4)† | (4, 4, 1024)
(4, 4) | (1, 1, 1024)
# BiGAN disc_code
(1, 1) | (1, 1, 512)
(1, 1) | (1, 1, 512)
# BiGAN disc_joint
(1, 1) | (1, 1, 1024)
(1, 1) | (1, 1, 1024)
(1, 1) | (1, 1, 1)
# αGAN generator
(4, 4) | (4, 4, 1024)
(4, 4) | (8, 8, 512)
(4, 4) | (16, 16, 256)
(4, 4)† | (32, 32, 128)
(4, 4)† | (64, 64, 64)
(4, 4) | (128, 128, 1)
# αGAN encoder
(4, 4) | (64, 64, 64)
(4, 4) | (32, 32, 128)
(4, 4) | (16, 16, 256)
(4, 4)† | (8, 8, 512)
(4, 4)† | (4, 4, 1024)
(4, 4) | (1, 1, 200)
# αGAN discriminator
(4, 4) | (64, 64, 64)
(4, 4) | (32, 32, 128)
(4, 4) | (16, 16, 256)
(4, 4)† | (8, 8, 512)
(4, 4)† | (4, 4, 1024)
minibatch discrimination | (4, 4, 1028)
(4, 4) | (1, 1, 1)
# αGAN code_discriminator
(1, 1) | (1, 1, 100)
(1, 1) | (1, 1, 50)
(1, 1) | (1, 1, 25)
(1, 1) | (1, 1, 1)
";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub model: String,
    pub subnet: String,
    pub rows: Vec<(String, String)>,
}

pub fn tables() -> Vec<Table> {
    let mut out: Vec<Table> = Vec::new();
    for line in TABLES.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if let Some(head) = line.strip_prefix("# ") {
            let (model, subnet) = head.split_once(' ').expect("model and sub-network");
            out.push(Table { model: model.into(), subnet: subnet.into(), rows: Vec::new() });
        } else {
            let (layer, shape) = line.split_once(" | ").expect("label | shape");
            out.last_mut().expect("header first").rows.push((layer.into(), shape.into()));
        }
    }
    out
}

/// Rows a built sub-network exposes, minus the flattening reshape in front of
/// a fully-connected layer, which the tables leave implicit.
pub fn built_rows(net: &xad_models::SubNetwork) -> Vec<(String, String)> {
    let rows = net.table_rows();
    rows.iter()
        .enumerate()
        .filter(|(i, r)| !(r.layer == "reshape" && rows.get(i + 1).is_some_and(|n| n.layer == "FC")))
        .map(|(_, r)| (r.layer.clone(), r.output.to_string()))
        .collect()
}
