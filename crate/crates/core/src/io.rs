//! CSV exports to any `io::Write` sink. Floats are written with 17
//! significant digits so that every value round-trips and identical runs
//! give identical bytes.

use std::io::{self, BufWriter, Write};

use crate::hawkes::{EventLog, SkeletonPath};
use crate::limit::{CoxLog, GridPath};
use crate::stationary::InvariantDensity;

/// `{:.16e}`: one leading digit and sixteen after the point.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv<W, I>(w: W, header: &str, rows: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = String>,
{
    let mut w = BufWriter::new(w);
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()
}

/// `t,component,mark`.
pub fn write_events<W: Write>(w: W, log: &EventLog) -> io::Result<()> {
    write_csv(
        w,
        "t,component,mark",
        log.events
            .iter()
            .map(|e| format!("{},{},{}", fmt_f64(e.t), e.component, fmt_f64(e.mark))),
    )
}

/// `t,x_post` for every anchor of the skeleton.
pub fn write_skeleton<W: Write>(w: W, skel: &SkeletonPath) -> io::Result<()> {
    write_csv(
        w,
        "t,x_post",
        skel.anchors
            .iter()
            .map(|&(t, x)| format!("{},{}", fmt_f64(t), fmt_f64(x))),
    )
}

/// `t,x` on the Euler–Maruyama grid.
pub fn write_grid_path<W: Write>(w: W, grid: &GridPath) -> io::Result<()> {
    write_csv(
        w,
        "t,x",
        grid.times()
            .zip(&grid.values)
            .map(|(t, &x)| format!("{},{}", fmt_f64(t), fmt_f64(x))),
    )
}

/// `t,component` with events of all components merged in time order.
pub fn write_cox<W: Write>(w: W, log: &CoxLog) -> io::Result<()> {
    write_csv(
        w,
        "t,component",
        log.merged().into_iter().map(|(t, c)| format!("{},{}", fmt_f64(t), c)),
    )
}

/// `x,p` on the tabulation grid of the density.
pub fn write_density<W: Write>(w: W, density: &InvariantDensity) -> io::Result<()> {
    write_csv(
        w,
        "x,p",
        density.grid().map(|(x, p)| format!("{},{}", fmt_f64(x), fmt_f64(p))),
    )
}
