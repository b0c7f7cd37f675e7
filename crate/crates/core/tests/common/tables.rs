//! Reference architectures transcribed row by row as (layer, input size,
//! output size), sizes written H×W×C.

use invertkit_core::nets::{
    build_conv_inversion_net, build_fc_inversion_net, build_hog_net, build_lbp_net, build_sift_net,
    NetworkSpec,
};

type Size = (usize, usize, usize);
type Row = (&'static str, Size, Size);

const FC8: &[Row] = &[
    ("fc1", (1, 1, 1000), (1, 1, 4096)),
    ("fc2", (1, 1, 4096), (1, 1, 4096)),
    ("fc3", (1, 1, 4096), (1, 1, 4096)),
    ("reshape", (1, 1, 4096), (4, 4, 256)),
    ("upconv1", (4, 4, 256), (8, 8, 256)),
    ("upconv2", (8, 8, 256), (16, 16, 128)),
    ("upconv3", (16, 16, 128), (32, 32, 64)),
    ("upconv4", (32, 32, 64), (64, 64, 32)),
    ("upconv5", (64, 64, 32), (128, 128, 3)),
];

const HOG: &[Row] = &[
    ("convA1", (32, 32, 31), (16, 16, 256)),
    ("convA2", (16, 16, 256), (8, 8, 512)),
    ("convA3", (8, 8, 512), (4, 4, 1024)),
    ("upconvA1", (4, 4, 1024), (8, 8, 512)),
    ("upconvA2", (8, 8, 512), (16, 16, 256)),
    ("upconvA3", (16, 16, 256), (32, 32, 128)),
    ("convB1", (32, 32, 31), (32, 32, 128)),
    ("convB2", (32, 32, 128), (32, 32, 128)),
    ("convJ1", (32, 32, 256), (32, 32, 256)),
    ("convJ2", (32, 32, 256), (32, 32, 128)),
    ("upconvJ4", (32, 32, 128), (64, 64, 64)),
    ("upconvJ5", (64, 64, 64), (128, 128, 32)),
    ("upconvJ6", (128, 128, 32), (256, 256, 3)),
];

const SIFT: &[Row] = &[
    ("conv1", (64, 64, 133), (32, 32, 256)),
    ("conv2", (32, 32, 256), (16, 16, 512)),
    ("conv3", (16, 16, 512), (8, 8, 1024)),
    ("conv4", (8, 8, 1024), (4, 4, 2048)),
    ("conv5", (4, 4, 2048), (4, 4, 2048)),
    ("conv6", (4, 4, 2048), (4, 4, 1024)),
    ("upconv1", (4, 4, 1024), (8, 8, 512)),
    ("upconv2", (8, 8, 512), (16, 16, 256)),
    ("upconv3", (16, 16, 256), (32, 32, 128)),
    ("upconv4", (32, 32, 128), (64, 64, 64)),
    ("upconv5", (64, 64, 64), (128, 128, 32)),
    ("upconv6", (128, 128, 32), (256, 256, 3)),
];

const LBP: &[Row] = &[
    ("convA1", (16, 16, 58), (8, 8, 256)),
    ("convA2", (8, 8, 256), (4, 4, 512)),
    ("convA3", (4, 4, 512), (4, 4, 1024)),
    ("upconvA1", (4, 4, 1024), (8, 8, 512)),
    ("upconvA2", (8, 8, 512), (16, 16, 256)),
    ("convB1", (16, 16, 58), (16, 16, 128)),
    ("convB2", (16, 16, 128), (16, 16, 128)),
    ("convJ1", (16, 16, 384), (16, 16, 256)),
    ("convJ2", (16, 16, 256), (16, 16, 128)),
    ("upconvJ3", (16, 16, 128), (32, 32, 128)),
    ("upconvJ4", (32, 32, 128), (64, 64, 64)),
    ("upconvJ5", (64, 64, 64), (128, 128, 32)),
    ("upconvJ6", (128, 128, 32), (256, 256, 3)),
];

const CONV5: &[Row] = &[
    ("conv1", (6, 6, 256), (6, 6, 256)),
    ("conv2", (6, 6, 256), (6, 6, 256)),
    ("conv3", (6, 6, 256), (6, 6, 256)),
    ("upconv1", (6, 6, 256), (12, 12, 256)),
    ("upconv2", (12, 12, 256), (24, 24, 128)),
    ("upconv3", (24, 24, 128), (48, 48, 64)),
    ("upconv4", (48, 48, 64), (96, 96, 32)),
    ("upconv5", (96, 96, 32), (192, 192, 3)),
];

/// One architecture: its title, the built network and the transcribed rows.
pub fn tables() -> Vec<(&'static str, NetworkSpec, &'static [Row])> {
    vec![
        ("hog", build_hog_net(), HOG),
        ("sift", build_sift_net(), SIFT),
        ("lbp", build_lbp_net(), LBP),
        (
            "conv5",
            build_conv_inversion_net((256, 6, 6)).unwrap(),
            CONV5,
        ),
        ("fc8", build_fc_inversion_net(1000).unwrap(), FC8),
    ]
}

/// Every input/output size that differs from the propagated shapes,
/// plus the number of cells compared.
pub fn mismatches() -> (usize, Vec<String>) {
    let mut cells = 0;
    let mut bad = Vec::new();
    for (title, spec, rows) in tables() {
        for &(layer, in_size, out_size) in rows {
            let Some(i) = spec.index_of(layer) else {
                bad.push(format!("{title}: missing layer {layer}"));
                continue;
            };
            let hwc = |(c, h, w): Size| (h, w, c);
            let got_in = hwc(spec.input_shapes(i)[0]);
            let got_out = hwc(spec.shapes()[i]);
            cells += 2;
            if got_in != in_size {
                bad.push(format!("{title} {layer} input: {got_in:?} vs {in_size:?}"));
            }
            if got_out != out_size {
                bad.push(format!(
                    "{title} {layer} output: {got_out:?} vs {out_size:?}"
                ));
            }
        }
    }
    (cells, bad)
}
