//! Polygon annotation documents (a minimal labelme subset) and their
//! rasterization into ground-truth masks.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::imaging::BinaryMask;

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<(f64, f64)>,
}

impl Polygon {
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::DegeneratePolygon {
                index: 0,
                points: vertices.len(),
            });
        }
        if vertices.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::NonFinite("polygon vertex"));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|&(x, y)| (x + dx, y + dy)).collect(),
        }
    }

    /// Edges as (previous vertex, current vertex) pairs, closing the ring.
    fn edges(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[(i + n - 1) % n], self.vertices[i]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    pub label: String,
    pub polygon: Polygon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    pub width: usize,
    pub height: usize,
    pub shapes: Vec<Shape>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawDocument {
    image_width: usize,
    image_height: usize,
    #[serde(default)]
    shapes: Vec<RawShape>,
}

#[derive(Deserialize)]
struct RawShape {
    #[serde(default)]
    label: String,
    #[serde(default = "default_shape_type")]
    shape_type: String,
    points: Vec<(f64, f64)>,
}

fn default_shape_type() -> String {
    "polygon".to_string()
}

pub fn parse_annotations(document: &[u8]) -> Result<AnnotationSet> {
    let raw: RawDocument = serde_json::from_slice(document).map_err(|e| Error::from_json(&e))?;
    if raw.image_width == 0 || raw.image_height == 0 {
        return Err(Error::invalid(format!(
            "annotated image size must be positive, got {}x{}",
            raw.image_width, raw.image_height
        )));
    }
    let mut shapes = Vec::with_capacity(raw.shapes.len());
    for (index, s) in raw.shapes.into_iter().enumerate() {
        if s.shape_type != "polygon" {
            return Err(Error::UnsupportedShape {
                index,
                shape_type: s.shape_type,
            });
        }
        let polygon = Polygon::new(s.points).map_err(|e| match e {
            Error::DegeneratePolygon { points, .. } => Error::DegeneratePolygon { index, points },
            other => other,
        })?;
        shapes.push(Shape {
            label: s.label,
            polygon,
        });
    }
    Ok(AnnotationSet {
        width: raw.image_width,
        height: raw.image_height,
        shapes,
    })
}

/// Even-odd scanline fill sampled at pixel centers, unioned over all shapes.
///
/// Only centers inside the image are ever sampled, which is equivalent to
/// clipping every polygon to the image rectangle.
pub fn rasterize(ann: &AnnotationSet) -> BinaryMask {
    let mut mask = BinaryMask::empty(ann.width, ann.height);
    let mut crossings = Vec::new();
    for shape in &ann.shapes {
        fill_polygon(&mut mask, &shape.polygon, &mut crossings);
    }
    mask
}

fn fill_polygon(mask: &mut BinaryMask, poly: &Polygon, crossings: &mut Vec<f64>) {
    let (w, h) = mask.dims();
    let (ymin, ymax) = poly
        .vertices()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| {
            (lo.min(y), hi.max(y))
        });
    let first_row = ((ymin - 0.5).floor().max(0.0) as usize).min(h);
    let last_row = ((ymax - 0.5).ceil().max(-1.0) + 1.0).min(h as f64) as usize;

    for row in first_row..last_row {
        let yc = row as f64 + 0.5;
        crossings.clear();
        for ((xj, yj), (xi, yi)) in poly.edges() {
            if (yi > yc) != (yj > yc) {
                crossings.push((xj - xi) * (yc - yi) / (yj - yi) + xi);
            }
        }
        crossings.sort_by(f64::total_cmp);
        // A center is inside when an odd number of crossings lie strictly to its right,
        // i.e. crossings[2k] <= xc < crossings[2k + 1].
        for pair in crossings.chunks_exact(2) {
            let start = first_center_at_or_after(pair[0]).max(0);
            let end = first_center_at_or_after(pair[1]).min(w as i64);
            for x in start..end {
                mask.set(x as usize, row, true);
            }
        }
    }
}

/// Smallest integer `x` with `x + 0.5 >= s`.
fn first_center_at_or_after(s: f64) -> i64 {
    let s = s.clamp(-1e15, 1e15);
    let mut x = (s - 0.5).ceil() as i64;
    while (x as f64) + 0.5 < s {
        x += 1;
    }
    while ((x - 1) as f64) + 0.5 >= s {
        x -= 1;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(shapes: &str) -> String {
        format!(r#"{{"imageWidth": 20, "imageHeight": 10, "shapes": [{shapes}]}}"#)
    }

    #[test]
    fn parses_two_polygons() {
        let d = doc(
            r#"{"label":"nucleus","shape_type":"polygon","points":[[1,1],[5,1],[5,5]]},
               {"label":"nucleus","shape_type":"polygon","points":[[10,1],[15,1],[15,5],[10,5]]}"#,
        );
        let ann = parse_annotations(d.as_bytes()).unwrap();
        assert_eq!(ann.shapes.len(), 2);
        assert_eq!((ann.width, ann.height), (20, 10));
        assert_eq!(ann.shapes[1].polygon.vertices().len(), 4);
    }

    #[test]
    fn empty_shape_list() {
        let ann = parse_annotations(doc("").as_bytes()).unwrap();
        assert!(ann.shapes.is_empty());
        assert_eq!(rasterize(&ann).count(), 0);
    }

    #[test]
    fn degenerate_polygon_names_index() {
        let d = doc(
            r#"{"label":"a","shape_type":"polygon","points":[[1,1],[5,1],[5,5]]},
               {"label":"b","shape_type":"polygon","points":[[1,1],[2,2]]}"#,
        );
        let err = parse_annotations(d.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::DegeneratePolygon { index: 1, points: 2 }));
        assert!(err.to_string().contains("degenerate polygon at index 1"));
    }

    #[test]
    fn rejects_non_polygon_shapes() {
        let d = doc(r#"{"label":"a","shape_type":"circle","points":[[1,1],[5,1],[5,5]]}"#);
        assert!(matches!(
            parse_annotations(d.as_bytes()),
            Err(Error::UnsupportedShape { index: 0, .. })
        ));
    }

    #[test]
    fn malformed_document_reports_line() {
        let err = parse_annotations(b"{\n\"imageWidth\": 4,\n\"imageHeight\": oops}").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rectangle_has_exact_area() {
        let d = doc(r#"{"label":"r","shape_type":"polygon","points":[[2,2],[12,2],[12,7],[2,7]]}"#);
        let mask = rasterize(&parse_annotations(d.as_bytes()).unwrap());
        assert_eq!(mask.count(), 50);
        assert!(mask.is_set(2, 2) && mask.is_set(11, 6));
        assert!(!mask.is_set(12, 2) && !mask.is_set(2, 7));
    }

    #[test]
    fn vertices_outside_are_clipped() {
        let poly = Polygon::new(vec![(-5.0, -5.0), (30.0, -5.0), (30.0, 30.0), (-5.0, 30.0)]).unwrap();
        let ann = AnnotationSet {
            width: 8,
            height: 6,
            shapes: vec![Shape {
                label: String::new(),
                polygon: poly,
            }],
        };
        assert_eq!(rasterize(&ann), BinaryMask::full(8, 6));
    }
}
