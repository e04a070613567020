//! Report rows as CSV. The first line is a `#` comment naming the schema
//! version; the second is the column header.

use std::io::Write;

use super::SweepRow;

pub const REPORT_SCHEMA: &str = "# cfsim report schema v1";

pub const REPORT_COLUMNS: [&str; 37] = [
    "layer",
    "batch",
    "in_channels",
    "in_height",
    "in_width",
    "out_channels",
    "filter_height",
    "filter_width",
    "stride_h",
    "stride_w",
    "pad_h",
    "pad_w",
    "dilation_h",
    "dilation_w",
    "array_rows",
    "array_cols",
    "word_elems",
    "elem_bytes",
    "clock_mhz",
    "dram_bandwidth_gbps",
    "max_multi_tile",
    "method",
    "tiles_per_pass",
    "total_cycles",
    "compute_cycles",
    "stall_cycles",
    "weight_load_cycles",
    "utilization",
    "tflops",
    "dram_read_bytes",
    "dram_write_bytes",
    "sram_reads",
    "sram_writes",
    "sram_idle_ratio",
    "sram_busiest_port_idle_ratio",
    "sram_resident_bytes",
    "error",
];

fn record(row: &SweepRow) -> Vec<String> {
    let s = &row.spec;
    let a = &row.arch;
    let mut f: Vec<String> = vec![row.layer.clone()];
    f.extend(
        [
            s.batch,
            s.in_channels,
            s.in_height,
            s.in_width,
            s.out_channels,
            s.filter_height,
            s.filter_width,
            s.stride_h,
            s.stride_w,
            s.pad_h,
            s.pad_w,
            s.dilation_h,
            s.dilation_w,
            a.array_rows,
            a.array_cols,
            a.word_elems,
            a.elem_bytes,
        ]
        .iter()
        .map(ToString::to_string),
    );
    f.push(a.clock_mhz.to_string());
    f.push(a.dram_bandwidth_gbps.to_string());
    f.push(a.max_multi_tile.to_string());
    f.push(row.method.to_string());
    match &row.result {
        Ok(r) => {
            f.extend(
                [r.tiles_per_pass as u64, r.total_cycles, r.compute_cycles, r.stall_cycles, r.weight_load_cycles]
                    .iter()
                    .map(ToString::to_string),
            );
            f.push(format!("{:.6}", r.pe_utilization));
            f.push(format!("{:.6}", r.tflops()));
            f.extend(
                [r.dram_bytes_read, r.dram_bytes_written, r.sram_reads, r.sram_writes]
                    .iter()
                    .map(ToString::to_string),
            );
            f.push(format!("{:.6}", r.sram_idle_ratio()));
            f.push(format!("{:.6}", r.sram_min_port_idle_ratio()));
            f.push(r.sram_resident_bytes.to_string());
            f.push(String::new());
        }
        Err(e) => {
            f.extend(std::iter::repeat_n(String::new(), 14));
            f.push(e.clone());
        }
    }
    debug_assert_eq!(f.len(), REPORT_COLUMNS.len());
    f
}

/// Writes the schema line, the header, and one record per row.
pub fn write_report_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "{REPORT_SCHEMA}")?;
    let mut w = ::csv::Writer::from_writer(out);
    w.write_record(REPORT_COLUMNS)?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conv::ConvSpec;
    use crate::memmodel::ArchConfig;
    use crate::simulator::{sweep, Method, SweepCase};

    #[test]
    fn empty_input_is_schema_and_header() {
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], REPORT_SCHEMA);
        assert!(lines[1].starts_with("layer,batch,"));
    }

    #[test]
    fn rows_have_every_column() {
        let cases = vec![SweepCase::new("l, with comma", ConvSpec::new(1, 2, 4, 4, 2, 3, 3))];
        let bad = ArchConfig {
            elem_bytes: 0,
            ..ArchConfig::default()
        };
        let rows = sweep(&cases, &[ArchConfig::default(), bad], &[Method::ChannelFirstImplicit]);
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut rdr = ::csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let recs: Vec<_> = rdr.records().map(Result::unwrap).collect();
        assert_eq!(recs.len(), 2);
        assert!(recs.iter().all(|r| r.len() == REPORT_COLUMNS.len()));
        assert_eq!(&recs[0][0], "l, with comma");
        assert!(recs[1][36].contains("elem_bytes"));
    }
}
