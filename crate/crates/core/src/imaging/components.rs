use super::BinaryMask;

/// Number of 8-connected foreground components.
pub fn count_components(mask: &BinaryMask) -> usize {
    let (w, h) = mask.dims();
    let mut seen = vec![false; w * h];
    let mut stack = Vec::new();
    let mut components = 0;
    for start in 0..w * h {
        if seen[start] || mask.data()[start] == 0 {
            continue;
        }
        components += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if !seen[j] && mask.data()[j] != 0 {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
    }
    components
}
