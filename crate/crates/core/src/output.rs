//! Fixed-format CSV writers. Numbers are printed with 17 significant digits
//! so that identical runs produce byte-identical files.

use std::io::{self, Write};

use crate::grid::{DensityGrid, DensityGrid2};

/// `x` with 17 significant digits in scientific notation.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_rows<W: Write>(mut w: W, header: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| fmt_num(*v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Several functions tabulated on one grid: `x,<name1>,<name2>,...`.
pub fn write_density_columns<W: Write>(
    mut w: W,
    names: &[&str],
    columns: &[&DensityGrid],
) -> io::Result<()> {
    assert_eq!(names.len(), columns.len());
    write!(w, "x")?;
    for n in names {
        write!(w, ",{n}")?;
    }
    writeln!(w)?;
    if let Some(first) = columns.first() {
        for (k, x) in first.grid.points().enumerate() {
            write!(w, "{}", fmt_num(x))?;
            for c in columns {
                write!(w, ",{}", fmt_num(c.values[k]))?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Long format `x1,x2,density`.
pub fn write_density2<W: Write>(mut w: W, d: &DensityGrid2) -> io::Result<()> {
    writeln!(w, "x1,x2,density")?;
    for (k1, x1) in d.x1.points().enumerate() {
        for (k2, x2) in d.x2.points().enumerate() {
            writeln!(
                w,
                "{},{},{}",
                fmt_num(x1),
                fmt_num(x2),
                fmt_num(d.get(k1, k2))
            )?;
        }
    }
    Ok(())
}
