use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub person_id: String,
    pub path: PathBuf,
}

/// Identity-labeled image list. Entry order is significant: it fixes each
/// person's image order and therefore which image is the gallery in each
/// evaluation round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Manifest("manifest has no entries".into()));
        }
        let mut seen = HashSet::new();
        for e in &entries {
            if e.person_id.is_empty() {
                return Err(Error::Manifest(format!("empty person_id for {}", e.path.display())));
            }
            if !seen.insert(&e.path) {
                return Err(Error::DuplicatePath(e.path.clone()));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    /// Persons in order of first appearance, each with its images in order.
    pub fn persons(&self) -> Vec<(String, Vec<PathBuf>)> {
        group_in_order(self.entries.iter().map(|e| (e.person_id.clone(), e.path.clone())))
    }
}

pub(crate) fn group_in_order<T>(items: impl IntoIterator<Item = (String, T)>) -> Vec<(String, Vec<T>)> {
    let mut groups: Vec<(String, Vec<T>)> = Vec::new();
    for (id, item) in items {
        match groups.iter_mut().find(|(g, _)| *g == id) {
            Some((_, list)) => list.push(item),
            None => groups.push((id, vec![item])),
        }
    }
    groups
}

/// Reads a `person_id,image_path` CSV. Relative image paths are resolved
/// against the manifest's directory. Image files are not opened here.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Read { path: path.to_path_buf(), source })?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["person_id", "image_path"] {
        return Err(Error::Manifest(format!(
            "{}: header must be 'person_id,image_path', got '{}'",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Manifest(format!("{}: row {}: {e}", path.display(), i + 2)))?;
        let (person, image) = match (record.get(0), record.get(1)) {
            (Some(p), Some(img)) if !p.is_empty() && !img.is_empty() => (p, img),
            _ => return Err(Error::Manifest(format!("{}: row {} is incomplete", path.display(), i + 2))),
        };
        let image = Path::new(image);
        let resolved = if image.is_absolute() { image.to_path_buf() } else { base.join(image) };
        entries.push(ManifestEntry { person_id: person.to_string(), path: resolved });
    }
    DatasetManifest::new(entries)
}

/// Writes `person_id,image_path` rows; paths are written as given.
pub fn write_manifest(rows: &[(String, String)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["person_id", "image_path"])?;
    for (id, p) in rows {
        w.write_record([id.as_str(), p.as_str()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Manifest(e.to_string()))?;
    fs::write(path, bytes).map_err(|source| Error::Write { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, body: &str) -> PathBuf {
        let p = dir.join("m.csv");
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn two_people_two_images() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "person_id,image_path\na,a1.pgm\nb,b1.pgm\na,a2.pgm\nb,b2.pgm\n");
        let m = load_manifest(&p).unwrap();
        assert_eq!(m.entries().len(), 4);
        let persons = m.persons();
        assert_eq!(persons.len(), 2);
        assert_eq!(persons[0].0, "a");
        assert_eq!(persons[0].1, vec![dir.path().join("a1.pgm"), dir.path().join("a2.pgm")]);
    }

    #[test]
    fn duplicate_path_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "person_id,image_path\na,x.pgm\nb,x.pgm\n");
        match load_manifest(&p) {
            Err(Error::DuplicatePath(path)) => assert!(path.ends_with("x.pgm")),
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn empty_and_malformed() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_manifest(write(dir.path(), "person_id,image_path\n")), Err(Error::Manifest(_))));
        assert!(load_manifest(write(dir.path(), "id,path\na,b\n")).is_err());
        assert!(load_manifest(write(dir.path(), "person_id,image_path\na\n")).is_err());
        assert!(load_manifest(write(dir.path(), "person_id,image_path\n,x.pgm\n")).is_err());
    }
}
