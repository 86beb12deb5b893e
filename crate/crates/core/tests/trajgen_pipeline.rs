use drawmpc_core::trajgen::{
    glyph_path, lift_to_reference, polyline_path, skeletonize, velocity_profile_curvature, BinaryImage, Board,
    DEFAULT_STRAIGHT_BOOST, DEFAULT_V_CAP, DEFAULT_Z_UP,
};

fn two_bars() -> BinaryImage {
    let mut rows = Vec::new();
    for _ in 0..3 {
        rows.push("..........................");
    }
    for _ in 0..20 {
        rows.push("..####..............####..");
    }
    for _ in 0..3 {
        rows.push("..........................");
    }
    BinaryImage::from_ascii(&rows)
}

#[test]
fn separate_strokes_are_joined_by_a_lift() {
    let board = Board::default();
    let path = glyph_path(&two_bars(), 300, &board, DEFAULT_Z_UP).unwrap();
    assert_eq!(path.len(), 300);
    let lifted: Vec<usize> = (0..path.len()).filter(|&i| !path.pen[i]).collect();
    assert!(!lifted.is_empty());
    // Pen-up points form one contiguous run.
    assert_eq!(lifted.last().unwrap() - lifted[0] + 1, lifted.len());
    let top = path.points.iter().map(|p| p.z).fold(f64::MIN, f64::max);
    assert!((top - DEFAULT_Z_UP).abs() < 1e-12);
    for (p, &pen) in path.points.iter().zip(&path.pen) {
        if pen {
            assert_eq!(p.z, 0.0);
        }
        assert!(p.x.abs() <= 0.1 + 1e-12 && p.y.abs() <= 0.1 + 1e-12);
    }
}

#[test]
fn skeleton_of_bars_is_thin() {
    let skel = skeletonize(&two_bars());
    assert!(skel.is_subset_of(&two_bars()));
    for y in 4..22 {
        let row: usize = (0..skel.width()).filter(|&x| skel.get(x, y)).count();
        assert!(row <= 2, "row {y} has {row} pixels");
    }
}

#[test]
fn profiled_glyph_lifts_to_padded_reference() {
    let board = Board::default();
    let path = glyph_path(&two_bars(), 200, &board, DEFAULT_Z_UP).unwrap();
    let path = velocity_profile_curvature(&path, DEFAULT_V_CAP, DEFAULT_STRAIGHT_BOOST).unwrap();
    assert!((path.max_speed() - DEFAULT_V_CAP).abs() < 1e-15);
    let r = lift_to_reference(&path, 20).unwrap();
    assert_eq!(r.len(), 220);
    assert_eq!(r.unpadded_len(), 200);
    assert!(r.states[200..].iter().all(|s| *s == r.states[199]));
}

#[test]
fn polyline_without_jumps_stays_on_board() {
    let pts: Vec<[f64; 2]> = (0..50).map(|i| [i as f64, (i as f64 * 0.3).sin() * 10.0]).collect();
    let path = polyline_path(&pts, 5.0, 80, &Board::default(), DEFAULT_Z_UP).unwrap();
    assert_eq!(path.len(), 80);
    assert!(path.pen.iter().all(|&p| p));
    assert!(path.points.iter().all(|p| p.z == 0.0));
}
