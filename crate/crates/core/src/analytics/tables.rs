use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::instrument::Cell;

use super::Analysis;

/// Fixed table files; the twelve selection-rate tables come in addition.
pub const TABLE_FILES: [&str; 5] = [
    "score_distribution.csv",
    "avg_by_grade.csv",
    "demographics.csv",
    "tests.csv",
    "analysis.json",
];

pub fn selection_rates_file(cell: Cell) -> String {
    format!("selection_rates_Q{}_L{}.csv", cell.question.number(), cell.level.number())
}

fn num(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_owned()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()
}

/// Writes every table into `dir` and returns the paths in a fixed order.
pub fn write_tables(analysis: &Analysis, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    for table in &analysis.selection_rates {
        let path = dir.join(selection_rates_file(table.cell));
        let groups: Vec<String> = table.groups.iter().map(ToString::to_string).collect();
        let mut header = vec!["choice", "status"];
        header.extend(groups.iter().map(String::as_str));
        let attempted = std::iter::once(vec!["(attempted)".to_owned(), String::new()])
            .map(|mut row| {
                row.extend(table.attempted.iter().map(ToString::to_string));
                row
            });
        let rows = table.rows.iter().map(|r| {
            let mut row = vec![r.choice.to_string(), r.status.as_str().to_owned()];
            row.extend(r.rates.iter().copied().map(num));
            row
        });
        write_csv(&path, &header, attempted.chain(rows))?;
        written.push(path);
    }

    let path = dir.join(TABLE_FILES[0]);
    write_csv(
        &path,
        &["question", "level", "score", "count", "percent"],
        analysis.score_distribution.iter().flat_map(|h| {
            h.bins.iter().map(move |b| {
                vec![
                    h.cell.question.to_string(),
                    h.cell.level.number().to_string(),
                    num(b.score),
                    b.count.to_string(),
                    num(b.percent),
                ]
            })
        }),
    )?;
    written.push(path);

    let path = dir.join(TABLE_FILES[1]);
    write_csv(
        &path,
        &["grade", "question", "students", "scores", "mean"],
        analysis.average_by_grade.iter().map(|a| {
            vec![
                a.grade.to_string(),
                a.question.map_or_else(|| "all".to_owned(), |q| q.to_string()),
                a.students.to_string(),
                a.scores.to_string(),
                num(a.mean),
            ]
        }),
    )?;
    written.push(path);

    let path = dir.join(TABLE_FILES[2]);
    write_csv(
        &path,
        &[
            "group", "students", "age_min", "age_max", "age_mean", "age_sd", "female", "male", "other", "undisclosed",
            "summary",
        ],
        analysis.demographics.iter().map(|d| {
            vec![
                d.group.to_string(),
                d.students.to_string(),
                d.age_min.to_string(),
                d.age_max.to_string(),
                num(d.age_mean),
                num(d.age_sd),
                d.female.to_string(),
                d.male.to_string(),
                d.other.to_string(),
                d.undisclosed.to_string(),
                d.summary(),
            ]
        }),
    )?;
    written.push(path);

    let path = dir.join(TABLE_FILES[3]);
    write_csv(
        &path,
        &[
            "test", "label", "statistic", "df1", "df2", "p_value", "mean_difference", "variance", "sd", "truncated",
        ],
        analysis.tests.iter().map(|t| {
            vec![
                t.test.as_str().to_owned(),
                t.label.clone(),
                num(t.statistic),
                opt(t.df.first().copied()),
                opt(t.df.get(1).copied()),
                num(t.p_value),
                opt(t.mean_difference),
                opt(t.variance),
                opt(t.sd),
                t.truncated.to_string(),
            ]
        }),
    )?;
    written.push(path);

    let path = dir.join(TABLE_FILES[4]);
    let json = serde_json::to_string_pretty(analysis).map_err(io::Error::other)?;
    fs::write(&path, json + "\n")?;
    written.push(path);
    Ok(written)
}
