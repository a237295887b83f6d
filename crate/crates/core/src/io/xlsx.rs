//! Minimal OOXML package: one worksheet with inline strings, formulas in A1
//! notation without cached values, hidden columns and first-row notes.
//!
//! Parts: `[Content_Types].xml`, `_rels/.rels`, `xl/workbook.xml`,
//! `xl/_rels/workbook.xml.rels`, `xl/styles.xml`, `xl/worksheets/sheet1.xml`,
//! and when there are notes `xl/worksheets/_rels/sheet1.xml.rels`,
//! `xl/comments1.xml` and `xl/drawings/vmlDrawing1.vml`.

use std::collections::BTreeSet;
use std::io::{Cursor, Read, Seek, Write};
use std::path::Path;

use quick_xml::escape::escape;
use quick_xml::events::Event;
use quick_xml::Reader;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, ZipArchive, ZipWriter};

use crate::formula::{column_letters, render_with, Notation, RenderOptions};
use crate::grid::{Cell, CellValue, Coord, ErrorKind, Workbook};

use super::IoError;

const MAIN_NS: &str = "http://schemas.openxmlformats.org/spreadsheetml/2006/main";
const REL_NS: &str = "http://schemas.openxmlformats.org/officeDocument/2006/relationships";
const PKG_REL_NS: &str = "http://schemas.openxmlformats.org/package/2006/relationships";
const XML_DECL: &str = "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n";

const REQUIRED_PARTS: [&str; 5] = [
    "[Content_Types].xml",
    "_rels/.rels",
    "xl/workbook.xml",
    "xl/_rels/workbook.xml.rels",
    "xl/worksheets/sheet1.xml",
];

fn a1(at: Coord) -> String {
    format!("{}{}", column_letters(at.col), at.row)
}

fn content_types(notes: bool) -> String {
    let mut s = format!(
        "{XML_DECL}<Types xmlns=\"http://schemas.openxmlformats.org/package/2006/content-types\">\
         <Default Extension=\"rels\" ContentType=\"application/vnd.openxmlformats-package.relationships+xml\"/>\
         <Default Extension=\"xml\" ContentType=\"application/xml\"/>"
    );
    if notes {
        s.push_str("<Default Extension=\"vml\" ContentType=\"application/vnd.openxmlformats-officedocument.vmlDrawing\"/>");
    }
    s.push_str(
        "<Override PartName=\"/xl/workbook.xml\" \
         ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml\"/>\
         <Override PartName=\"/xl/worksheets/sheet1.xml\" \
         ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.worksheet+xml\"/>\
         <Override PartName=\"/xl/styles.xml\" \
         ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.styles+xml\"/>",
    );
    if notes {
        s.push_str(
            "<Override PartName=\"/xl/comments1.xml\" \
             ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.comments+xml\"/>",
        );
    }
    s.push_str("</Types>");
    s
}

fn root_rels() -> String {
    format!(
        "{XML_DECL}<Relationships xmlns=\"{PKG_REL_NS}\">\
         <Relationship Id=\"rId1\" Type=\"{REL_NS}/officeDocument\" Target=\"xl/workbook.xml\"/>\
         </Relationships>"
    )
}

fn workbook_xml() -> String {
    format!(
        "{XML_DECL}<workbook xmlns=\"{MAIN_NS}\" xmlns:r=\"{REL_NS}\">\
         <sheets><sheet name=\"Sheet1\" sheetId=\"1\" r:id=\"rId1\"/></sheets>\
         <calcPr fullCalcOnLoad=\"1\"/></workbook>"
    )
}

fn workbook_rels() -> String {
    format!(
        "{XML_DECL}<Relationships xmlns=\"{PKG_REL_NS}\">\
         <Relationship Id=\"rId1\" Type=\"{REL_NS}/worksheet\" Target=\"worksheets/sheet1.xml\"/>\
         <Relationship Id=\"rId2\" Type=\"{REL_NS}/styles\" Target=\"styles.xml\"/>\
         </Relationships>"
    )
}

fn styles_xml() -> String {
    format!(
        "{XML_DECL}<styleSheet xmlns=\"{MAIN_NS}\">\
         <fonts count=\"1\"><font><sz val=\"11\"/><name val=\"Calibri\"/></font></fonts>\
         <fills count=\"2\"><fill><patternFill patternType=\"none\"/></fill>\
         <fill><patternFill patternType=\"gray125\"/></fill></fills>\
         <borders count=\"1\"><border><left/><right/><top/><bottom/><diagonal/></border></borders>\
         <cellStyleXfs count=\"1\"><xf numFmtId=\"0\" fontId=\"0\" fillId=\"0\" borderId=\"0\"/></cellStyleXfs>\
         <cellXfs count=\"1\"><xf numFmtId=\"0\" fontId=\"0\" fillId=\"0\" borderId=\"0\" xfId=\"0\"/></cellXfs>\
         </styleSheet>"
    )
}

fn cell_xml(at: Coord, cell: &Cell, out: &mut String) -> Result<(), IoError> {
    let r = a1(at);
    let formula = |text: &str, out: &mut String| {
        out.push_str(&format!("<c r=\"{r}\"><f>{}</f></c>", escape(text)));
    };
    match cell {
        Cell::Formula(expr) => {
            let text = render_with(expr, Notation::A1, at, RenderOptions { dollar_absolute: true })?;
            formula(&text[1..], out);
        }
        Cell::Literal(v) => match v {
            CellValue::Number(x) => out.push_str(&format!("<c r=\"{r}\"><v>{}</v></c>", crate::grid::format_number(*x))),
            CellValue::Text(s) => out.push_str(&format!(
                "<c r=\"{r}\" t=\"inlineStr\"><is><t xml:space=\"preserve\">{}</t></is></c>",
                escape(s.as_str())
            )),
            CellValue::Boolean(b) => out.push_str(&format!("<c r=\"{r}\" t=\"b\"><v>{}</v></c>", u8::from(*b))),
            CellValue::Blank => {}
            CellValue::Error(ErrorKind::Na) => formula("NA()", out),
            CellValue::Error(ErrorKind::Value) => formula("INDEX(0,-1)", out),
            CellValue::Error(ErrorKind::Div0) => formula("1/0", out),
            CellValue::Error(kind) => out.push_str(&format!("<c r=\"{r}\" t=\"e\"><v>{}</v></c>", escape(kind.token()))),
        },
    }
    Ok(())
}

fn sheet_xml(wb: &Workbook, notes: bool) -> Result<String, IoError> {
    let mut s = format!("{XML_DECL}<worksheet xmlns=\"{MAIN_NS}\" xmlns:r=\"{REL_NS}\">");
    let hidden: Vec<u32> = wb.hidden_columns().collect();
    if !hidden.is_empty() {
        s.push_str("<cols>");
        // consecutive hidden columns share one element
        let mut i = 0;
        while i < hidden.len() {
            let mut j = i;
            while j + 1 < hidden.len() && hidden[j + 1] == hidden[j] + 1 {
                j += 1;
            }
            s.push_str(&format!(
                "<col min=\"{}\" max=\"{}\" width=\"9\" hidden=\"1\" customWidth=\"1\"/>",
                hidden[i], hidden[j]
            ));
            i = j + 1;
        }
        s.push_str("</cols>");
    }
    s.push_str("<sheetData>");
    let mut row = 0;
    for (at, cell) in wb.cells() {
        if matches!(cell, Cell::Literal(CellValue::Blank)) {
            continue;
        }
        if at.row != row {
            if row != 0 {
                s.push_str("</row>");
            }
            row = at.row;
            s.push_str(&format!("<row r=\"{row}\">"));
        }
        cell_xml(at, cell, &mut s)?;
    }
    if row != 0 {
        s.push_str("</row>");
    }
    s.push_str("</sheetData>");
    if notes {
        s.push_str("<legacyDrawing r:id=\"rId2\"/>");
    }
    s.push_str("</worksheet>");
    Ok(s)
}

fn sheet_rels() -> String {
    format!(
        "{XML_DECL}<Relationships xmlns=\"{PKG_REL_NS}\">\
         <Relationship Id=\"rId1\" Type=\"{REL_NS}/comments\" Target=\"../comments1.xml\"/>\
         <Relationship Id=\"rId2\" Type=\"{REL_NS}/vmlDrawing\" Target=\"../drawings/vmlDrawing1.vml\"/>\
         </Relationships>"
    )
}

fn comments_xml(wb: &Workbook) -> String {
    let mut s = format!("{XML_DECL}<comments xmlns=\"{MAIN_NS}\"><authors><author>sqlsheet</author></authors><commentList>");
    for (at, text) in wb.comments() {
        s.push_str(&format!(
            "<comment ref=\"{}\" authorId=\"0\"><text><t xml:space=\"preserve\">{}</t></text></comment>",
            a1(at),
            escape(text)
        ));
    }
    s.push_str("</commentList></comments>");
    s
}

fn vml(wb: &Workbook) -> String {
    let mut s = String::from(
        "<xml xmlns:v=\"urn:schemas-microsoft-com:vml\" xmlns:o=\"urn:schemas-microsoft-com:office:office\" \
         xmlns:x=\"urn:schemas-microsoft-com:office:excel\">\
         <o:shapelayout v:ext=\"edit\"><o:idmap v:ext=\"edit\" data=\"1\"/></o:shapelayout>\
         <v:shapetype id=\"_x0000_t202\" coordsize=\"21600,21600\" o:spt=\"202\" path=\"m,l,21600r21600,l21600,xe\">\
         <v:stroke joinstyle=\"miter\"/><v:path gradientshapeok=\"t\" o:connecttype=\"rect\"/></v:shapetype>",
    );
    for (i, (at, _)) in wb.comments().enumerate() {
        s.push_str(&format!(
            "<v:shape id=\"_x0000_s{}\" type=\"#_x0000_t202\" \
             style=\"position:absolute;margin-left:59.25pt;margin-top:1.5pt;width:180pt;height:60pt;z-index:{};visibility:hidden\" \
             fillcolor=\"#ffffe1\" o:insetmode=\"auto\"><v:fill color2=\"#ffffe1\"/>\
             <v:shadow on=\"t\" color=\"black\" obscured=\"t\"/><v:path o:connecttype=\"none\"/>\
             <v:textbox style=\"mso-direction-alt:auto\"><div style=\"text-align:left\"></div></v:textbox>\
             <x:ClientData ObjectType=\"Note\"><x:MoveWithCells/><x:SizeWithCells/>\
             <x:AutoFill>False</x:AutoFill><x:Row>{}</x:Row><x:Column>{}</x:Column></x:ClientData></v:shape>",
            1025 + i,
            i + 1,
            at.row - 1,
            at.col - 1
        ));
    }
    s.push_str("</xml>");
    s
}

/// Builds the package in memory.
pub fn write_xlsx(wb: &Workbook) -> Result<Vec<u8>, IoError> {
    let notes = wb.comments().next().is_some();
    let mut parts: Vec<(&str, String)> = vec![
        ("[Content_Types].xml", content_types(notes)),
        ("_rels/.rels", root_rels()),
        ("xl/workbook.xml", workbook_xml()),
        ("xl/_rels/workbook.xml.rels", workbook_rels()),
        ("xl/styles.xml", styles_xml()),
        ("xl/worksheets/sheet1.xml", sheet_xml(wb, notes)?),
    ];
    if notes {
        parts.push(("xl/worksheets/_rels/sheet1.xml.rels", sheet_rels()));
        parts.push(("xl/comments1.xml", comments_xml(wb)));
        parts.push(("xl/drawings/vmlDrawing1.vml", vml(wb)));
    }
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    let options = SimpleFileOptions::default().compression_method(CompressionMethod::Deflated);
    for (name, body) in parts {
        zip.start_file(name, options)?;
        zip.write_all(body.as_bytes())?;
    }
    Ok(zip.finish()?.into_inner())
}

pub fn write_xlsx_file(wb: &Workbook, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, write_xlsx(wb)?)?;
    Ok(())
}

/// What a structurally valid package contains.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct XlsxSummary {
    pub parts: Vec<String>,
    pub cells: usize,
    pub formulas: usize,
    pub comments: usize,
    pub hidden_columns: BTreeSet<u32>,
}

fn read_part<R: Read + Seek>(zip: &mut ZipArchive<R>, name: &str) -> Result<String, IoError> {
    let mut f = zip
        .by_name(name)
        .map_err(|_| IoError::Package(format!("missing part {name}")))?;
    let mut s = String::new();
    f.read_to_string(&mut s)?;
    Ok(s)
}

/// Calls `visit` with the local name and attributes of every start tag;
/// fails on malformed XML.
fn scan_xml(name: &str, text: &str, mut visit: impl FnMut(&[u8], Vec<(Vec<u8>, String)>)) -> Result<(), IoError> {
    let mut reader = Reader::from_str(text);
    let mut depth = 0i64;
    let bad = |e: String| IoError::Package(format!("{name}: {e}"));
    loop {
        let event = reader.read_event().map_err(|e| bad(e.to_string()))?;
        let e = match &event {
            Event::Start(e) => {
                depth += 1;
                e
            }
            Event::Empty(e) => e,
            Event::End(_) => {
                depth -= 1;
                if depth < 0 {
                    return Err(bad("unbalanced end tag".into()));
                }
                continue;
            }
            Event::Eof => break,
            _ => continue,
        };
        let attrs = e
            .attributes()
            .map(|a| {
                let a = a.map_err(|e| bad(e.to_string()))?;
                let v = a.normalized_value(quick_xml::XmlVersion::Implicit1_0).map_err(|e| bad(e.to_string()))?.into_owned();
                Ok((a.key.local_name().as_ref().as_bytes().to_vec(), v))
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        visit(e.local_name().as_ref().as_bytes(), attrs);
    }
    if depth != 0 {
        return Err(bad("unclosed element".into()));
    }
    Ok(())
}

/// Checks that `bytes` is a zip holding the required, well-formed parts and
/// that every relationship target exists.
pub fn validate_xlsx(bytes: &[u8]) -> Result<XlsxSummary, IoError> {
    let mut zip = ZipArchive::new(Cursor::new(bytes))?;
    let mut summary = XlsxSummary {
        parts: zip.file_names().map(String::from).collect(),
        ..Default::default()
    };
    summary.parts.sort();
    for part in REQUIRED_PARTS {
        if !summary.parts.iter().any(|p| p == part) {
            return Err(IoError::Package(format!("missing part {part}")));
        }
    }
    let names = summary.parts.clone();
    for name in &names {
        if !(name.ends_with(".xml") || name.ends_with(".rels") || name.ends_with(".vml")) {
            continue;
        }
        let text = read_part(&mut zip, name)?;
        let dir = name.rsplit_once('/').map_or("", |(d, _)| d);
        let base = if name.starts_with("_rels/") {
            String::new()
        } else if let Some(d) = dir.strip_suffix("/_rels") {
            d.to_string()
        } else {
            dir.to_string()
        };
        let mut targets = Vec::new();
        let mut overrides = Vec::new();
        scan_xml(name, &text, |tag, attrs| {
            let get = |k: &[u8]| attrs.iter().find(|(a, _)| a == k).map(|(_, v)| v.clone());
            match tag {
                b"Relationship" => targets.extend(get(b"Target")),
                b"Override" => overrides.extend(get(b"PartName")),
                b"c" if name == "xl/worksheets/sheet1.xml" => summary.cells += 1,
                b"f" if name == "xl/worksheets/sheet1.xml" => summary.formulas += 1,
                b"col" if name == "xl/worksheets/sheet1.xml" => {
                    let lo = get(b"min").and_then(|v| v.parse::<u32>().ok());
                    let hi = get(b"max").and_then(|v| v.parse::<u32>().ok());
                    if get(b"hidden").as_deref() == Some("1") {
                        if let (Some(lo), Some(hi)) = (lo, hi) {
                            summary.hidden_columns.extend(lo..=hi);
                        }
                    }
                }
                b"comment" if name == "xl/comments1.xml" => summary.comments += 1,
                _ => {}
            }
        })?;
        for t in targets {
            let path = resolve(&base, &t);
            if !names.contains(&path) {
                return Err(IoError::Package(format!("{name}: relationship target {t} is missing")));
            }
        }
        for p in overrides {
            if !names.iter().any(|n| p.trim_start_matches('/') == n) {
                return Err(IoError::Package(format!("content type override for missing part {p}")));
            }
        }
    }
    if !read_part(&mut zip, "xl/worksheets/sheet1.xml")?.contains("<sheetData") {
        return Err(IoError::Package("worksheet has no sheetData".into()));
    }
    Ok(summary)
}

fn resolve(base: &str, target: &str) -> String {
    if let Some(abs) = target.strip_prefix('/') {
        return abs.to_string();
    }
    let mut parts: Vec<&str> = base.split('/').filter(|s| !s.is_empty()).collect();
    for seg in target.split('/') {
        match seg {
            ".." => {
                parts.pop();
            }
            "." | "" => {}
            s => parts.push(s),
        }
    }
    parts.join("/")
}
