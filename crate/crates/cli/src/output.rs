use std::io::{self, Write};

use clap::ValueEnum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Tsv,
    Human,
}

/// Row sink. Delimited formats stream; the human format buffers rows to
/// align columns and prints them on [`Table::finish`].
pub struct Table<W: Write> {
    out: W,
    format: Format,
    header: Vec<String>,
    buffered: Vec<Vec<String>>,
}

impl<W: Write> Table<W> {
    pub fn new(out: W, format: Format, header: &[&str]) -> io::Result<Self> {
        let mut table = Table {
            out,
            format,
            header: header.iter().map(|h| h.to_string()).collect(),
            buffered: Vec::new(),
        };
        if format != Format::Human {
            let header = table.header.clone();
            table.write_delimited(&header)?;
        }
        Ok(table)
    }

    pub fn row(&mut self, fields: Vec<String>) -> io::Result<()> {
        debug_assert_eq!(fields.len(), self.header.len());
        match self.format {
            Format::Human => {
                self.buffered.push(fields);
                Ok(())
            }
            _ => self.write_delimited(&fields),
        }
    }

    pub fn finish(mut self) -> io::Result<()> {
        if self.format == Format::Human {
            let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
            for row in &self.buffered {
                for (w, f) in widths.iter_mut().zip(row) {
                    *w = (*w).max(f.chars().count());
                }
            }
            let rows = std::iter::once(&self.header).chain(&self.buffered);
            for row in rows {
                let line: Vec<String> = row
                    .iter()
                    .zip(&widths)
                    .map(|(f, &w)| format!("{f:<w$}"))
                    .collect();
                writeln!(self.out, "{}", line.join("  ").trim_end())?;
            }
        }
        self.out.flush()
    }

    fn write_delimited(&mut self, fields: &[String]) -> io::Result<()> {
        let sep = if self.format == Format::Tsv {
            '\t'
        } else {
            ','
        };
        let line: Vec<String> = fields.iter().map(|f| quote(f, sep)).collect();
        writeln!(self.out, "{}", line.join(&sep.to_string()))
    }
}

fn quote(field: &str, sep: char) -> String {
    if field.contains([sep, '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn render(format: Format, rows: &[&[&str]]) -> String {
        let mut buf = Vec::new();
        let mut t = Table::new(&mut buf, format, &["a", "bb"]).unwrap();
        for r in rows {
            t.row(r.iter().map(|s| s.to_string()).collect()).unwrap();
        }
        t.finish().unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn csv_quotes_separators() {
        assert_eq!(render(Format::Csv, &[&["x,y", "1"]]), "a,bb\n\"x,y\",1\n");
        assert_eq!(render(Format::Tsv, &[&["x,y", "1"]]), "a\tbb\nx,y\t1\n");
    }

    #[test]
    fn human_aligns() {
        assert_eq!(
            render(Format::Human, &[&["long", "1"]]),
            "a     bb\nlong  1\n"
        );
    }
}
