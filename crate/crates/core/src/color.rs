//! Semantic coloring maps and region recoloring of albedo textures.
//!
//! A [`SemanticMask`] labels every texel of a UV layout with a facial
//! region. The coloring map of an albedo texture holds the per-channel
//! median color of each region. Recoloring shifts every texel of a region
//! by `target - median` and clamps to `[0, 255]`, so texel deviations from
//! the regional median (the identity detail) are kept wherever no clamping
//! happens, and asking for the texture's own coloring map returns it
//! unchanged.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::pngio::{self, PngKind, RawImage};
use crate::rng::NormalSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[repr(u8)]
pub enum Region {
    Background = 0,
    Skin = 1,
    Lips = 2,
    Eyebrows = 3,
    Tongue = 4,
}

impl Region {
    /// The four editable regions, in coloring-map order.
    pub const EDITABLE: [Region; 4] = [Region::Skin, Region::Lips, Region::Eyebrows, Region::Tongue];

    pub fn from_index(i: u8) -> Option<Region> {
        Some(match i {
            0 => Region::Background,
            1 => Region::Skin,
            2 => Region::Lips,
            3 => Region::Eyebrows,
            4 => Region::Tongue,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Region::Background => "background",
            Region::Skin => "skin",
            Region::Lips => "lips",
            Region::Eyebrows => "eyebrows",
            Region::Tongue => "tongue",
        }
    }
}

/// Display palette for indexed mask PNGs.
pub const MASK_PALETTE: [[u8; 3]; 5] = [[0, 0, 0], [224, 172, 105], [200, 40, 60], [60, 40, 20], [230, 110, 120]];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticMask {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<Region>,
    pub uv_layout_id: String,
}

impl SemanticMask {
    pub fn to_png(&self) -> Result<Vec<u8>> {
        pngio::encode(&RawImage {
            width: self.width as u32,
            height: self.height as u32,
            kind: PngKind::Indexed8 {
                palette: MASK_PALETTE.to_vec(),
            },
            data: self.labels.iter().map(|&r| r as u8).collect(),
        })
    }

    /// Reads an indexed (or plain 8-bit gray) label PNG.
    pub fn from_png(bytes: &[u8], uv_layout_id: impl Into<String>) -> Result<Self> {
        let img = pngio::decode(bytes)?;
        if !matches!(img.kind, PngKind::Indexed8 { .. } | PngKind::Gray8) {
            return Err(Error::Image("mask must be an 8-bit indexed or gray PNG".into()));
        }
        let labels = img
            .data
            .iter()
            .map(|&i| Region::from_index(i).ok_or_else(|| Error::Image(format!("mask label {i} out of range"))))
            .collect::<Result<_>>()?;
        Ok(SemanticMask {
            width: img.width as usize,
            height: img.height as usize,
            labels,
            uv_layout_id: uv_layout_id.into(),
        })
    }

    pub fn count(&self, region: Region) -> usize {
        self.labels.iter().filter(|&&r| r == region).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlbedoMap {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<[u8; 3]>,
}

impl AlbedoMap {
    pub fn filled(width: usize, height: usize, color: [u8; 3]) -> Self {
        AlbedoMap {
            width,
            height,
            rgb: vec![color; width * height],
        }
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        pngio::encode(&RawImage {
            width: self.width as u32,
            height: self.height as u32,
            kind: PngKind::Rgb8,
            data: self.rgb.iter().flatten().copied().collect(),
        })
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self> {
        let img = pngio::decode(bytes)?;
        if img.kind != PngKind::Rgb8 {
            return Err(Error::Image("albedo must be an 8-bit RGB PNG".into()));
        }
        Ok(AlbedoMap {
            width: img.width as usize,
            height: img.height as usize,
            rgb: img.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
        })
    }
}

/// Median color of each editable region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemanticColorMap {
    pub skin: [u8; 3],
    pub lips: [u8; 3],
    pub eyebrows: [u8; 3],
    pub tongue: [u8; 3],
}

impl SemanticColorMap {
    pub fn get(&self, region: Region) -> Option<[u8; 3]> {
        match region {
            Region::Skin => Some(self.skin),
            Region::Lips => Some(self.lips),
            Region::Eyebrows => Some(self.eyebrows),
            Region::Tongue => Some(self.tongue),
            Region::Background => None,
        }
    }

    pub fn set(&mut self, region: Region, color: [u8; 3]) {
        match region {
            Region::Skin => self.skin = color,
            Region::Lips => self.lips = color,
            Region::Eyebrows => self.eyebrows = color,
            Region::Tongue => self.tongue = color,
            Region::Background => {}
        }
    }
}

fn check_dims(albedo: &AlbedoMap, mask: &SemanticMask) -> Result<()> {
    if (albedo.width, albedo.height) != (mask.width, mask.height) || albedo.rgb.len() != mask.labels.len() {
        return Err(Error::DimensionMismatch {
            expected: mask.labels.len(),
            found: albedo.rgb.len(),
        });
    }
    Ok(())
}

/// k-th smallest value (0-based) of a 256-bin histogram.
fn kth(hist: &[usize; 256], k: usize) -> u8 {
    let mut seen = 0;
    for (v, &c) in hist.iter().enumerate() {
        seen += c;
        if seen > k {
            return v as u8;
        }
    }
    unreachable!("k below total count")
}

/// Per-channel median over the region; an even count averages the two
/// middle values and rounds half up.
pub fn region_median(albedo: &AlbedoMap, mask: &SemanticMask, region: Region) -> Result<[u8; 3]> {
    check_dims(albedo, mask)?;
    let mut hist = [[0usize; 256]; 3];
    let mut n = 0;
    for (px, _) in albedo.rgb.iter().zip(&mask.labels).filter(|(_, &r)| r == region) {
        for k in 0..3 {
            hist[k][px[k] as usize] += 1;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyRegion(region.name().into()));
    }
    Ok(std::array::from_fn(|k| {
        if n % 2 == 1 {
            kth(&hist[k], n / 2)
        } else {
            let (a, b) = (kth(&hist[k], n / 2 - 1) as u16, kth(&hist[k], n / 2) as u16);
            (a + b).div_ceil(2) as u8
        }
    }))
}

pub fn build_color_map(albedo: &AlbedoMap, mask: &SemanticMask) -> Result<SemanticColorMap> {
    check_dims(albedo, mask)?;
    let empty: Vec<&str> = Region::EDITABLE
        .iter()
        .filter(|&&r| mask.count(r) == 0)
        .map(|r| r.name())
        .collect();
    if !empty.is_empty() {
        return Err(Error::EmptyRegion(empty.join(", ")));
    }
    Ok(SemanticColorMap {
        skin: region_median(albedo, mask, Region::Skin)?,
        lips: region_median(albedo, mask, Region::Lips)?,
        eyebrows: region_median(albedo, mask, Region::Eyebrows)?,
        tongue: region_median(albedo, mask, Region::Tongue)?,
    })
}

/// Shifts each region so its median moves to the target color.
/// Background texels are copied unchanged. Every editable region must be
/// present in the mask.
pub fn recolor(
    albedo: &AlbedoMap,
    mask: &SemanticMask,
    target: &SemanticColorMap,
    exec: Execution,
) -> Result<AlbedoMap> {
    check_dims(albedo, mask)?;
    let empty: Vec<&str> = Region::EDITABLE
        .into_iter()
        .filter(|&r| mask.count(r) == 0)
        .map(Region::name)
        .collect();
    if !empty.is_empty() {
        return Err(Error::EmptyRegion(empty.join(", ")));
    }
    let mut offsets = [[0i16; 3]; 5];
    for region in Region::EDITABLE {
        let median = region_median(albedo, mask, region)?;
        let goal = target.get(region).expect("editable region");
        offsets[region as usize] = std::array::from_fn(|k| goal[k] as i16 - median[k] as i16);
    }
    let mut out = albedo.rgb.clone();
    let chunk = albedo.width.max(1) * 16;
    exec.for_each_chunk_mut(&mut out, chunk, |ci, texels| {
        let labels = &mask.labels[ci * chunk..ci * chunk + texels.len()];
        for (px, &r) in texels.iter_mut().zip(labels) {
            if r == Region::Background {
                continue;
            }
            let off = offsets[r as usize];
            *px = std::array::from_fn(|k| (px[k] as i16 + off[k]).clamp(0, 255) as u8);
        }
    });
    Ok(AlbedoMap {
        width: albedo.width,
        height: albedo.height,
        rgb: out,
    })
}

/// Index pairing `source -> target` for color-transfer training tuples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    pub source: usize,
    pub target: usize,
}

/// Pairs each item with `perm[i]` for a seeded uniform permutation; an item
/// may be paired with itself.
pub fn pairing_indices(n: usize, seed: u64) -> Vec<Pairing> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut src = NormalSource::new(seed);
    perm.shuffle(src.rng_mut());
    perm.into_iter()
        .enumerate()
        .map(|(source, target)| Pairing { source, target })
        .collect()
}

/// `(source albedo, target coloring map, target albedo)`.
pub type TransferTuple<'a> = (&'a AlbedoMap, &'a SemanticColorMap, &'a AlbedoMap);

pub fn random_target_pairing(batch: &[(AlbedoMap, SemanticColorMap)], seed: u64) -> Vec<TransferTuple<'_>> {
    pairing_indices(batch.len(), seed)
        .into_iter()
        .map(|p| (&batch[p.source].0, &batch[p.target].1, &batch[p.target].0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask_of(labels: Vec<Region>, width: usize) -> SemanticMask {
        SemanticMask {
            width,
            height: labels.len() / width,
            labels,
            uv_layout_id: "test".into(),
        }
    }

    fn strip(colors: &[[u8; 3]]) -> AlbedoMap {
        AlbedoMap {
            width: colors.len(),
            height: 1,
            rgb: colors.to_vec(),
        }
    }

    #[test]
    fn odd_and_even_medians() {
        let a = strip(&[[10, 0, 0], [30, 0, 0], [20, 0, 0]]);
        let m = mask_of(vec![Region::Skin; 3], 3);
        assert_eq!(region_median(&a, &m, Region::Skin).unwrap(), [20, 0, 0]);

        let a = strip(&[[20, 0, 0], [10, 0, 0]]);
        let m = mask_of(vec![Region::Skin; 2], 2);
        // brute force: sort, average the middle pair, round half up
        let mut v = [20u16, 10];
        v.sort();
        assert_eq!(
            region_median(&a, &m, Region::Skin).unwrap(),
            [(v[0] + v[1]).div_ceil(2) as u8, 0, 0]
        );
        assert_eq!(region_median(&a, &m, Region::Skin).unwrap(), [15, 0, 0]);

        let a = strip(&[[10, 0, 0], [11, 0, 0]]);
        assert_eq!(region_median(&a, &m, Region::Skin).unwrap(), [11, 0, 0]);
        assert!(matches!(
            region_median(&a, &m, Region::Lips),
            Err(Error::EmptyRegion(_))
        ));
    }

    fn four_regions() -> (AlbedoMap, SemanticMask) {
        use Region::*;
        let labels = vec![Skin, Skin, Skin, Lips, Lips, Eyebrows, Tongue, Background];
        let colors = [
            [100, 50, 50],
            [110, 60, 40],
            [90, 55, 45],
            [200, 20, 30],
            [190, 30, 40],
            [40, 30, 20],
            [220, 100, 110],
            [1, 2, 3],
        ];
        (strip(&colors), mask_of(labels, 8))
    }

    #[test]
    fn color_map_of_mixed_fixture() {
        let (a, m) = four_regions();
        let cm = build_color_map(&a, &m).unwrap();
        // hand medians: skin {90,100,110}/{50,55,60}/{40,45,50}; lips pairs round half up
        assert_eq!(cm.skin, [100, 55, 45]);
        assert_eq!(cm.lips, [195, 25, 35]);
        assert_eq!(cm.eyebrows, [40, 30, 20]);
        assert_eq!(cm.tongue, [220, 100, 110]);
    }

    #[test]
    fn empty_regions_are_listed() {
        let a = strip(&[[1, 1, 1], [2, 2, 2]]);
        let m = mask_of(vec![Region::Skin, Region::Lips], 2);
        match build_color_map(&a, &m) {
            Err(Error::EmptyRegion(s)) => assert_eq!(s, "eyebrows, tongue"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn uniform_shift_and_clamp() {
        use Region::*;
        let m = mask_of(vec![Skin, Skin, Skin, Skin, Lips, Eyebrows, Tongue, Background], 8);
        let a = AlbedoMap::filled(8, 1, [100, 50, 50]);
        let mut t = SemanticColorMap {
            skin: [120, 50, 50],
            lips: [0; 3],
            eyebrows: [0; 3],
            tongue: [0; 3],
        };
        let out = recolor(&a, &m, &t, Execution::Sequential).unwrap();
        assert!(out.rgb[..4].iter().all(|&p| p == [120, 50, 50]));
        assert_eq!(out.rgb[7], [100, 50, 50]);

        let a = strip(&[[250, 0, 0], [230, 0, 0], [240, 0, 0], [0; 3], [0; 3], [0; 3]]);
        let m = mask_of(vec![Skin, Skin, Skin, Lips, Eyebrows, Tongue], 6);
        t.skin = [250, 0, 0]; // median 240 -> 250: offset +10
        let out = recolor(&a, &m, &t, Execution::Sequential).unwrap();
        assert_eq!(out.rgb[..3], [[255, 0, 0], [240, 0, 0], [250, 0, 0]]);
        t.skin = [255, 0, 0]; // offset +15 on the channel at 250 -> clamped
        let out = recolor(&a, &m, &t, Execution::Sequential).unwrap();
        assert_eq!(out.rgb[0], [255, 0, 0]);
    }

    #[test]
    fn recolor_needs_every_region() {
        let m = mask_of(vec![Region::Skin, Region::Lips], 2);
        let a = AlbedoMap::filled(2, 1, [1, 2, 3]);
        let target = SemanticColorMap {
            skin: [0; 3],
            lips: [0; 3],
            eyebrows: [0; 3],
            tongue: [0; 3],
        };
        match recolor(&a, &m, &target, Execution::Sequential) {
            Err(Error::EmptyRegion(s)) => assert_eq!(s, "eyebrows, tongue"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn identity_target_is_exact() {
        let (a, m) = four_regions();
        let cm = build_color_map(&a, &m).unwrap();
        assert_eq!(recolor(&a, &m, &cm, Execution::Parallel).unwrap(), a);
    }

    #[test]
    fn mismatched_dimensions_error() {
        let (a, _) = four_regions();
        let m = mask_of(vec![Region::Skin; 4], 4);
        assert!(recolor(
            &a,
            &m,
            &SemanticColorMap {
                skin: [0; 3],
                lips: [0; 3],
                eyebrows: [0; 3],
                tongue: [0; 3]
            },
            Execution::Sequential
        )
        .is_err());
    }

    #[test]
    fn mask_png_round_trip() {
        let (_, m) = four_regions();
        let back = SemanticMask::from_png(&m.to_png().unwrap(), "test").unwrap();
        assert_eq!(back, m);
        let json = serde_json::to_string(&SemanticColorMap {
            skin: [1, 2, 3],
            lips: [4, 5, 6],
            eyebrows: [7, 8, 9],
            tongue: [10, 11, 12],
        })
        .unwrap();
        assert_eq!(
            json,
            r#"{"skin":[1,2,3],"lips":[4,5,6],"eyebrows":[7,8,9],"tongue":[10,11,12]}"#
        );
        assert!(serde_json::from_str::<SemanticColorMap>(r#"{"skin":[1,2,3]}"#).is_err());
    }

    #[test]
    fn pairing_is_a_seeded_permutation() {
        assert_eq!(pairing_indices(1, 3), vec![Pairing { source: 0, target: 0 }]);
        assert_eq!(pairing_indices(50, 11), pairing_indices(50, 11));
        let mut targets: Vec<usize> = pairing_indices(50, 11).iter().map(|p| p.target).collect();
        targets.sort();
        assert_eq!(targets, (0..50).collect::<Vec<_>>());

        let batch: Vec<(AlbedoMap, SemanticColorMap)> = (0..3)
            .map(|i| {
                let c = [i as u8; 3];
                (
                    AlbedoMap::filled(1, 1, c),
                    SemanticColorMap {
                        skin: c,
                        lips: c,
                        eyebrows: c,
                        tongue: c,
                    },
                )
            })
            .collect();
        for (src, cm, tgt) in random_target_pairing(&batch, 4) {
            assert_eq!(cm.skin, tgt.rgb[0]);
            assert!(src.rgb[0][0] < 3);
        }
    }

    #[test]
    fn self_pairing_rate_matches_binomial() {
        // Simulation oracle: with 100 items, P(j = i) = 1/100 per item.
        let (n, reps) = (100usize, 1000u64);
        let fixed: usize = (0..reps)
            .map(|s| pairing_indices(n, s).iter().filter(|p| p.source == p.target).count())
            .sum();
        let total = (n as f64) * reps as f64;
        let p = 1.0 / n as f64;
        let rate = fixed as f64 / total;
        let sigma = (p * (1.0 - p) / total).sqrt();
        assert!((rate - p).abs() <= 3.0 * sigma, "rate {rate}");
    }

    proptest! {
        #[test]
        fn median_is_order_free(mut px in proptest::collection::vec(any::<[u8; 3]>(), 1..64), seed in any::<u64>()) {
            let m = mask_of(vec![Region::Skin; px.len()], px.len());
            let before = region_median(&strip(&px), &m, Region::Skin).unwrap();
            let mut src = NormalSource::new(seed);
            px.shuffle(src.rng_mut());
            prop_assert_eq!(region_median(&strip(&px), &m, Region::Skin).unwrap(), before);
        }

        #[test]
        fn median_matches_sort(px in proptest::collection::vec(any::<u8>(), 1..64)) {
            let a = strip(&px.iter().map(|&v| [v, 255 - v, v / 2]).collect::<Vec<_>>());
            let m = mask_of(vec![Region::Lips; px.len()], px.len());
            let got = region_median(&a, &m, Region::Lips).unwrap();
            let mut s = px.clone();
            s.sort();
            let n = s.len();
            let want = if n % 2 == 1 { s[n / 2] } else { (s[n / 2 - 1] as u16 + s[n / 2] as u16).div_ceil(2) as u8 };
            prop_assert_eq!(got[0], want);
        }
    }
}
