/// Compact letter display by insert-and-absorb.
///
/// `significant[i][j]` marks pairs that differ; levels are assumed sorted by
/// descending mean. Two levels share a letter iff they do not differ. Letters
/// are assigned in order of the first level each group contains, so the
/// top-ranked level always carries `a`.
pub fn compact_letters(significant: &[Vec<bool>]) -> Vec<String> {
    let k = significant.len();
    let mut columns: Vec<Vec<bool>> = vec![vec![true; k]];
    for i in 0..k {
        for j in i + 1..k {
            if !significant[i][j] {
                continue;
            }
            // Insert: split every column holding both levels.
            let mut next = Vec::with_capacity(columns.len() + 1);
            for col in columns {
                if col[i] && col[j] {
                    let mut without_i = col.clone();
                    without_i[i] = false;
                    let mut without_j = col;
                    without_j[j] = false;
                    next.push(without_j);
                    next.push(without_i);
                } else {
                    next.push(col);
                }
            }
            columns = absorb(next);
        }
    }
    columns.sort_by_key(|col| col.iter().position(|&m| m).unwrap_or(k));

    let mut letters = vec![String::new(); k];
    for (c, col) in columns.iter().enumerate() {
        let letter = letter_name(c);
        for (level, &member) in col.iter().enumerate() {
            if member {
                letters[level].push_str(&letter);
            }
        }
    }
    letters
}

/// Drops columns that are subsets of another column (and duplicates).
fn absorb(columns: Vec<Vec<bool>>) -> Vec<Vec<bool>> {
    let subset = |a: &[bool], b: &[bool]| a.iter().zip(b).all(|(&x, &y)| !x || y);
    let mut kept: Vec<Vec<bool>> = Vec::with_capacity(columns.len());
    for (idx, col) in columns.iter().enumerate() {
        let redundant = columns.iter().enumerate().any(|(other, c)| {
            other != idx && subset(col, c) && (col != c || other < idx)
        });
        if !redundant {
            kept.push(col.clone());
        }
    }
    kept
}

/// `a`..`z`, then `aa`, `ab`, ... for displays needing more than 26 groups.
fn letter_name(mut i: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'a' + (i % 26) as u8);
        if i < 26 {
            break;
        }
        i = i / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii letters")
}
