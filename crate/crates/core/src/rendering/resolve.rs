//! Axis-aligned collision resolution for ID boxes and edge labels.
//!
//! Each sweep visits every pair of collision rects in placement order and
//! pushes the lower-priority mark of a colliding pair one step away from
//! the other along the axis of smaller overlap. Marks that are still
//! colliding after the sweep budget are relocated to the nearest free slot,
//! first on a step-sized spiral, then anywhere in the image.

use serde::{Deserialize, Serialize};

use super::layout::{MarkKind, MarkPlacement};
use crate::config::RenderStyle;
use crate::geometry::{ImageDims, Rect};

/// Guides are added for edge labels whose center moved further than this.
pub const GUIDE_MIN_DISPLACEMENT_PX: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub placements: Vec<MarkPlacement>,
    /// All collision rects disjoint and inside the image.
    pub resolved: bool,
    /// Sweeps that moved at least one mark.
    pub iterations: u32,
}

impl Layout {
    pub fn collision_rects(&self) -> impl Iterator<Item = &Rect> {
        self.placements
            .iter()
            .filter(|p| p.has_rect())
            .map(|p| &p.rect)
    }
}

fn priority(kind: MarkKind) -> u8 {
    match kind {
        MarkKind::EdgeLabel => 1,
        _ => 0,
    }
}

/// Index into `ids` of the mark that yields in a collision between `a < b`.
fn mover(kinds: &[MarkKind], a: usize, b: usize) -> (usize, usize) {
    if priority(kinds[a]) < priority(kinds[b]) {
        (a, b)
    } else {
        (b, a)
    }
}

fn push_away(m: &Rect, other: &Rect, step: i32, w: i32, h: i32) -> Rect {
    let (ox, oy) = m.overlap(other);
    let mc = m.center();
    let oc = other.center();
    let sign = |d: f64| if d < 0.0 { -1 } else { 1 };
    let sx = sign(mc.x - oc.x);
    let sy = sign(mc.y - oc.y);
    let tries = if ox <= oy {
        [(sx, 0), (-sx, 0), (0, sy), (0, -sy)]
    } else {
        [(0, sy), (0, -sy), (sx, 0), (-sx, 0)]
    };
    for (dx, dy) in tries {
        let next = m.translated(dx * step, dy * step).clamped_within(w, h);
        if next != *m {
            return next;
        }
    }
    *m
}

fn all_disjoint(rects: &[Rect], w: i32, h: i32) -> bool {
    rects.iter().all(|r| r.within(w, h))
        && (0..rects.len()).all(|a| (a + 1..rects.len()).all(|b| !rects[a].intersects(&rects[b])))
}

/// Spiral rings searched for a nearby step-aligned free slot.
const SPIRAL_RINGS: i32 = 12;

fn is_free(rects: &[Rect], placed: &[bool], i: usize, c: &Rect, w: i32, h: i32) -> bool {
    c.within(w, h)
        && rects
            .iter()
            .enumerate()
            .all(|(j, o)| j == i || !placed[j] || !o.intersects(c))
}

/// Nearest step-aligned offset of `rects[i]` that is in bounds and free.
fn spiral_search(
    rects: &[Rect],
    placed: &[bool],
    i: usize,
    step: i32,
    w: i32,
    h: i32,
) -> Option<Rect> {
    let r = rects[i];
    for ring in 1..=SPIRAL_RINGS {
        let mut ring_cands: Vec<(i64, i32, i32)> = Vec::with_capacity(8 * ring as usize);
        for dy in -ring..=ring {
            for dx in -ring..=ring {
                if dx.abs().max(dy.abs()) == ring {
                    ring_cands.push(((dx * dx + dy * dy) as i64, dy, dx));
                }
            }
        }
        ring_cands.sort_unstable();
        for (_, dy, dx) in ring_cands {
            let c = r.translated(dx * step, dy * step);
            if is_free(rects, placed, i, &c, w, h) {
                return Some(c);
            }
        }
    }
    None
}

/// Nearest free position flush with the image border or another placed
/// rect on both axes. Any free position can slide into one of these, so
/// this fails only when no free position exists.
fn corner_search(rects: &[Rect], placed: &[bool], i: usize, w: i32, h: i32) -> Option<Rect> {
    let r = rects[i];
    let others = || {
        rects
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i && placed[*j])
            .map(|(_, o)| o)
    };
    let mut xs: Vec<i32> = vec![0, w - r.w];
    let mut ys: Vec<i32> = vec![0, h - r.h];
    for o in others() {
        xs.extend([o.right(), o.x - r.w]);
        ys.extend([o.bottom(), o.y - r.h]);
    }
    xs.sort_unstable();
    xs.dedup();
    ys.sort_unstable();
    ys.dedup();
    let mut best: Option<(i64, Rect)> = None;
    for &y in &ys {
        for &x in &xs {
            let c = Rect::new(x, y, r.w, r.h);
            let d = (x - r.x) as i64 * (x - r.x) as i64 + (y - r.y) as i64 * (y - r.y) as i64;
            if best.is_some_and(|(bd, _)| bd <= d) {
                continue;
            }
            if is_free(rects, placed, i, &c, w, h) {
                best = Some((d, c));
            }
        }
    }
    best.map(|(_, c)| c)
}

fn relocate(rects: &mut [Rect], placed: &[bool], i: usize, step: i32, w: i32, h: i32) -> bool {
    match spiral_search(rects, placed, i, step, w, h)
        .or_else(|| corner_search(rects, placed, i, w, h))
    {
        Some(r) => {
            rects[i] = r;
            true
        }
        None => false,
    }
}

/// Pack every rect into horizontal shelves, tallest and widest first, each
/// shelf kept in left-to-right order of the original positions.
fn shelf_pack(rects: &[Rect], w: i32, h: i32) -> Option<Vec<Rect>> {
    let mut order: Vec<usize> = (0..rects.len()).collect();
    order.sort_by_key(|&i| {
        (
            std::cmp::Reverse(rects[i].h),
            std::cmp::Reverse(rects[i].w),
            i,
        )
    });
    // (top, height, used width, members)
    let mut shelves: Vec<(i32, i32, i32, Vec<usize>)> = Vec::new();
    for i in order {
        let r = rects[i];
        if r.w > w {
            return None;
        }
        match shelves.iter_mut().find(|s| r.h <= s.1 && s.2 + r.w <= w) {
            Some(s) => {
                s.2 += r.w;
                s.3.push(i);
            }
            None => {
                let top = shelves.last().map_or(0, |s| s.0 + s.1);
                if top + r.h > h {
                    return None;
                }
                shelves.push((top, r.h, r.w, vec![i]));
            }
        }
    }
    let mut out = rects.to_vec();
    for (top, _, _, mut members) in shelves {
        members.sort_by_key(|&i| (rects[i].x, i));
        let mut x = 0;
        for i in members {
            out[i] = Rect::new(x, top, rects[i].w, rects[i].h);
            x += rects[i].w;
        }
    }
    Some(out)
}

/// Relocate the mover of every remaining collision; if that still leaves
/// overlaps, re-place every mark greedily in priority order, and as a last
/// resort pack all marks into shelves.
fn fallback(rects: &mut [Rect], kinds: &[MarkKind], step: i32, w: i32, h: i32) {
    let all = vec![true; rects.len()];
    for a in 0..rects.len() {
        for b in a + 1..rects.len() {
            if rects[a].intersects(&rects[b]) {
                let (m, _) = mover(kinds, a, b);
                relocate(rects, &all, m, step, w, h);
            }
        }
    }
    if all_disjoint(rects, w, h) {
        return;
    }
    let mut order: Vec<usize> = (0..rects.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(priority(kinds[i])), i));
    let mut placed = vec![false; rects.len()];
    for i in order {
        if !is_free(rects, &placed, i, &rects[i], w, h) {
            relocate(rects, &placed, i, step, w, h);
        }
        placed[i] = true;
    }
    if all_disjoint(rects, w, h) {
        return;
    }
    if let Some(packed) = shelf_pack(rects, w, h) {
        rects.copy_from_slice(&packed);
    }
}

/// Separate overlapping collision rects and add dashed guides for displaced
/// edge labels. Never fails; an unresolvable layout is flagged instead.
pub fn resolve_collisions(
    mut placements: Vec<MarkPlacement>,
    dims: ImageDims,
    style: &RenderStyle,
) -> Layout {
    let (w, h) = (dims.width as i32, dims.height as i32);
    let step = style.resolver_step_px.max(1) as i32;
    let ids: Vec<usize> = (0..placements.len())
        .filter(|&i| placements[i].has_rect())
        .collect();
    let kinds: Vec<MarkKind> = ids.iter().map(|&i| placements[i].kind).collect();
    let mut rects: Vec<Rect> = ids
        .iter()
        .map(|&i| placements[i].rect.clamped_within(w, h))
        .collect();

    let mut iterations = 0;
    while iterations < style.resolver_max_iters {
        let mut moved = false;
        for a in 0..rects.len() {
            for b in a + 1..rects.len() {
                if !rects[a].intersects(&rects[b]) {
                    continue;
                }
                let (m, o) = mover(&kinds, a, b);
                let next = push_away(&rects[m], &rects[o], step, w, h);
                if next != rects[m] {
                    rects[m] = next;
                    moved = true;
                }
            }
        }
        if !moved {
            break;
        }
        iterations += 1;
    }

    if !all_disjoint(&rects, w, h) {
        fallback(&mut rects, &kinds, step, w, h);
    }
    let resolved = all_disjoint(&rects, w, h);

    for (k, &i) in ids.iter().enumerate() {
        placements[i].rect = rects[k];
    }
    let guides: Vec<MarkPlacement> = placements
        .iter()
        .filter(|p| p.kind == MarkKind::EdgeLabel)
        .filter(|p| p.rect.center().distance(p.anchor) > GUIDE_MIN_DISPLACEMENT_PX)
        .map(|p| MarkPlacement {
            kind: MarkKind::DashedGuide,
            rect: Rect::EMPTY,
            anchor: p.anchor,
            owner: p.owner,
            color: p.color,
            text: None,
            path: vec![p.rect.center(), p.anchor],
        })
        .collect();
    placements.extend(guides);

    Layout {
        placements,
        resolved,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rendering::color::Rgb;
    use crate::rendering::layout::MarkOwner;
    use proptest::prelude::*;

    fn mark(kind: MarkKind, rect: Rect, owner: usize) -> MarkPlacement {
        MarkPlacement {
            kind,
            rect,
            anchor: rect.center(),
            owner: if kind == MarkKind::EdgeLabel {
                MarkOwner::Relation(owner)
            } else {
                MarkOwner::Object(owner)
            },
            color: Rgb::BLACK,
            text: Some("x".into()),
            path: Vec::new(),
        }
    }

    fn dims() -> ImageDims {
        ImageDims::new(640, 480).unwrap()
    }

    #[test]
    fn disjoint_input_unchanged() {
        let input = vec![
            mark(MarkKind::IdBox, Rect::new(10, 10, 30, 20), 0),
            mark(MarkKind::IdBox, Rect::new(40, 10, 30, 20), 1),
            mark(MarkKind::EdgeLabel, Rect::new(10, 30, 60, 20), 0),
        ];
        let out = resolve_collisions(input.clone(), dims(), &RenderStyle::default());
        assert!(out.resolved);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.placements, input);
    }

    #[test]
    fn stacked_id_boxes_separate_by_step_multiple() {
        let r = Rect::new(200, 200, 40, 24);
        let input = vec![mark(MarkKind::IdBox, r, 0), mark(MarkKind::IdBox, r, 1)];
        let out = resolve_collisions(input, dims(), &RenderStyle::default());
        assert!(out.resolved);
        let a = out.placements[0].rect;
        let b = out.placements[1].rect;
        assert_eq!(a.intersection_area(&b), 0);
        assert_eq!(a, r, "earlier placement stays put");
        assert_eq!((b.x - r.x) % 4, 0);
        assert_eq!((b.y - r.y) % 4, 0);
        assert_ne!(b, r);
    }

    #[test]
    fn id_box_yields_to_edge_label() {
        let r = Rect::new(200, 200, 40, 24);
        let input = vec![
            mark(MarkKind::EdgeLabel, r, 0),
            mark(MarkKind::IdBox, r.translated(5, 3), 0),
        ];
        let out = resolve_collisions(input, dims(), &RenderStyle::default());
        assert_eq!(out.placements[0].rect, r);
        assert!(!out.placements[0].rect.intersects(&out.placements[1].rect));
        assert!(out
            .placements
            .iter()
            .all(|p| p.kind != MarkKind::DashedGuide));
    }

    #[test]
    fn displaced_label_gets_one_guide() {
        let a = Rect::new(100, 100, 80, 24);
        let input = vec![
            mark(MarkKind::EdgeLabel, a, 0),
            mark(MarkKind::EdgeLabel, a, 1),
        ];
        let out = resolve_collisions(input, dims(), &RenderStyle::default());
        let guides: Vec<&MarkPlacement> = out
            .placements
            .iter()
            .filter(|p| p.kind == MarkKind::DashedGuide)
            .collect();
        assert_eq!(guides.len(), 1);
        let moved = &out.placements[1];
        assert_eq!(guides[0].owner, MarkOwner::Relation(1));
        assert_eq!(guides[0].path, vec![moved.rect.center(), moved.anchor]);
    }

    #[test]
    fn crowded_corner_uses_fallback() {
        // Many copies of one rect wedged in a corner.
        let r = Rect::new(0, 0, 60, 30);
        let input: Vec<MarkPlacement> = (0..12).map(|i| mark(MarkKind::IdBox, r, i)).collect();
        let out = resolve_collisions(
            input,
            ImageDims::new(200, 200).unwrap(),
            &RenderStyle::default(),
        );
        assert!(out.resolved);
        let rects: Vec<Rect> = out.collision_rects().copied().collect();
        assert!(all_disjoint(&rects, 200, 200));
    }

    #[test]
    fn impossible_layout_is_flagged() {
        let r = Rect::new(0, 0, 64, 64);
        let input: Vec<MarkPlacement> = (0..3).map(|i| mark(MarkKind::IdBox, r, i)).collect();
        let out = resolve_collisions(
            input,
            ImageDims::new(100, 100).unwrap(),
            &RenderStyle::default(),
        );
        assert!(!out.resolved);
        assert_eq!(out.placements.len(), 3);
    }

    proptest! {
        #[test]
        fn random_layouts_resolve(
            specs in prop::collection::vec((0i32..600, 0i32..440, 8i32..120, 8i32..36, any::<bool>()), 1..32)
        ) {
            let input: Vec<MarkPlacement> = specs
                .iter()
                .enumerate()
                .map(|(i, &(x, y, w, h, label))| {
                    let kind = if label { MarkKind::EdgeLabel } else { MarkKind::IdBox };
                    mark(kind, Rect::new(x, y, w, h), i)
                })
                .collect();
            let out = resolve_collisions(input, dims(), &RenderStyle::default());
            prop_assert!(out.resolved);
            let rects: Vec<Rect> = out.collision_rects().copied().collect();
            prop_assert!(all_disjoint(&rects, 640, 480));
            for p in out.placements.iter().filter(|p| p.kind == MarkKind::EdgeLabel) {
                let guided = out.placements.iter().any(|g| g.kind == MarkKind::DashedGuide && g.owner == p.owner);
                prop_assert_eq!(guided, p.rect.center().distance(p.anchor) > 1.0);
            }
        }
    }
}
