use crate::error::Result;
use crate::feature::Image;
use crate::matching::CorrespondenceField;

/// Rows of the legend strip under the correspondence image.
pub const LEGEND_ROWS: usize = 8;
const MAX_HUE: f32 = 300.0;

fn hsv(h: f32, s: f32, v: f32) -> [f32; 3] {
    let c = v * s;
    let hp = (h / 60.0).rem_euclid(6.0);
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [
        (r + m).clamp(0.0, 1.0),
        (g + m).clamp(0.0, 1.0),
        (b + m).clamp(0.0, 1.0),
    ]
}

/// Color each LR feature pixel by its match: hue from the matched reference
/// column, saturation from the row, value from the similarity (negative
/// scores are black). Pixels take the match of the patch centered nearest
/// them. A legend strip is appended: a hue ramp over reference columns and
/// a value ramp over similarity `0..1`.
pub fn visualize_correspondence(field: &CorrespondenceField) -> Result<Image> {
    field.validate()?;
    let g = field.geometry;
    let side = g.patch_side();
    let half = (g.patch - 1) / 2;
    let norm = |v: usize, len: usize| {
        if len > 1 {
            v as f32 / (len - 1) as f32
        } else {
            0.0
        }
    };
    let (h, w) = (g.lr_h, g.lr_w);
    Image::from_fn(h + LEGEND_ROWS, w, |y, x| {
        if y >= h {
            let t = norm(x, w);
            return if y - h < LEGEND_ROWS / 2 {
                hsv(MAX_HUE * t, 1.0, 1.0)
            } else {
                [t; 3]
            };
        }
        let k = (y / g.block) * g.grid_cols + x / g.block;
        let (ly, lx) = (y % g.block, x % g.block);
        let iy = ly.saturating_sub(half).min(side - 1);
        let ix = lx.saturating_sub(half).min(side - 1);
        let i = iy * side + ix;
        let (ry, rx) = field.ref_anchor(k, i);
        let hue = MAX_HUE * norm(rx + half, g.ref_w);
        let sat = 0.25 + 0.75 * norm(ry + half, g.ref_h);
        hsv(hue, sat, field.blocks[k].scores[i].clamp(0.0, 1.0))
    })
}
