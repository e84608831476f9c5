mod common;

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;

use common::*;
use envsniff::bank::{diff_releases, load_bank, save_bank, ApiBank};
use envsniff::ingest::{ingest_many, ingest_release, IndexClient, IngestError};

fn ingest_toylib(index: &FixtureIndex, cache: &std::path::Path) -> ApiBank {
    let client = IndexClient::new(&index.base_url());
    let listing = client.list_releases("toylib").unwrap();
    let releases = ingest_many(&client, &listing.refs, cache, 2)
        .into_iter()
        .map(|o| o.result.unwrap())
        .collect();
    ApiBank::from_releases(releases).unwrap()
}

#[test]
fn listing_is_ascending() {
    let dir = tempfile::tempdir().unwrap();
    let index = FixtureIndex::new(dir.path());
    for v in ["10.0", "2.0", "1.0"] {
        index.publish("toylib", v, &toylib_files("1.0"));
    }
    let listing = IndexClient::new(&index.base_url()).list_releases("toylib").unwrap();
    let versions: Vec<&str> = listing.refs.iter().map(|r| r.version.as_str()).collect();
    assert_eq!(versions, ["1.0", "2.0", "10.0"]);
}

#[test]
fn unknown_library() {
    let dir = tempfile::tempdir().unwrap();
    let index = FixtureIndex::new(dir.path());
    let err = IndexClient::new(&index.base_url()).list_releases("nope").unwrap_err();
    assert!(matches!(err, IngestError::UnknownLibrary(_)));
}

#[test]
fn toylib_api_history() {
    let dir = tempfile::tempdir().unwrap();
    let index = FixtureIndex::new(&dir.path().join("index"));
    index.publish_toylib();
    let bank = ingest_toylib(&index, &dir.path().join("cache"));
    assert_eq!(bank.index.versions_of("toylib"), TOYLIB_VERSIONS);
    let with_g: Vec<String> = bank
        .index
        .query("toylib.g", None)
        .into_iter()
        .map(|(_, v)| v)
        .collect();
    assert_eq!(with_g, ["2.0", "3.0"]);
    let core_g = bank.get("toylib", "2.0").unwrap();
    assert_eq!(core_g.canonical("toylib.g"), Some("toylib.core.g"));
    assert!(core_g.contains("toylib.Box.get"));

    let d = diff_releases(bank.get("toylib", "3.0").unwrap(), bank.get("toylib", "4.0").unwrap()).unwrap();
    assert!(d.removed.iter().any(|n| n == "toylib.core.g"));
    assert!(d.removed.iter().any(|n| n == "toylib.core.h"));
    assert!(d.added.is_empty());
}

#[test]
fn save_load_and_double_ingest_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let index = FixtureIndex::new(&dir.path().join("index"));
    index.publish_toylib();
    index.publish("pandas", "1.0", &pandas_files());
    let client = IndexClient::new(&index.base_url());

    let mut releases = Vec::new();
    for lib in ["toylib", "pandas"] {
        for r in client.list_releases(lib).unwrap().refs {
            let first = ingest_release(&client, &r, &dir.path().join("cache-a")).unwrap();
            let second = ingest_release(&client, &r, &dir.path().join("cache-b")).unwrap();
            assert_eq!(first, second, "{} {}", r.library, r.version);
            releases.push(first);
        }
    }
    let bank = ApiBank::from_releases(releases.clone()).unwrap();
    let bank_dir = dir.path().join("bank");
    save_bank(&bank, &bank_dir).unwrap();
    let loaded = load_bank(&bank_dir).unwrap();
    assert_eq!(loaded, bank);
    assert_eq!(loaded.index.identity(), bank.index.identity());

    releases.reverse();
    let reordered = ApiBank::from_releases(releases).unwrap();
    assert_eq!(reordered.index.identity(), bank.index.identity());
}

#[test]
fn cached_archive_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let index = FixtureIndex::new(&dir.path().join("index"));
    index.publish("pandas", "1.0", &pandas_files());
    let client = IndexClient::new(&index.base_url());
    let r = client.list_releases("pandas").unwrap().refs.remove(0);
    let cache = dir.path().join("cache");
    ingest_release(&client, &r, &cache).unwrap();
    let before = client.request_count();
    ingest_release(&client, &r, &cache).unwrap();
    assert_eq!(client.request_count(), before);
}

#[test]
fn tampered_archive_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let index = FixtureIndex::new(&dir.path().join("index"));
    let path = index.publish("pandas", "1.0", &pandas_files());
    let client = IndexClient::new(&index.base_url());
    let r = client.list_releases("pandas").unwrap().refs.remove(0);
    std::fs::write(&path, b"not a wheel").unwrap();
    let err = ingest_release(&client, &r, &dir.path().join("cache")).unwrap_err();
    assert!(matches!(err, IngestError::ChecksumMismatch { .. }), "{err}");
}

/// Serves the fixture index over HTTP for a fixed number of requests.
fn serve(root: std::path::PathBuf, requests: usize) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming().take(requests) {
            let mut stream = stream.unwrap();
            let mut line = String::new();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            reader.read_line(&mut line).unwrap();
            loop {
                let mut header = String::new();
                if reader.read_line(&mut header).unwrap() == 0 || header == "\r\n" {
                    break;
                }
            }
            let path = line.split_whitespace().nth(1).unwrap_or("/").trim_start_matches('/');
            match std::fs::read(root.join(path)) {
                Ok(body) => {
                    write!(stream, "HTTP/1.1 200 OK\r\nContent-Length: {}\r\nConnection: close\r\n\r\n", body.len()).unwrap();
                    stream.write_all(&body).unwrap();
                }
                Err(_) => {
                    write!(stream, "HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\nConnection: close\r\n\r\n").unwrap();
                }
            }
        }
    });
    format!("http://{addr}")
}

#[test]
fn http_index() {
    let dir = tempfile::tempdir().unwrap();
    let index = FixtureIndex::new(dir.path());
    index.publish("pandas", "1.0", &pandas_files());
    let base = serve(dir.path().to_path_buf(), 2);
    let client = IndexClient::new(&base);
    let mut listing = client.list_releases("pandas").unwrap();
    assert_eq!(listing.refs.len(), 1);
    // archive URLs point at the filesystem; the metadata came over HTTP
    let release = ingest_release(&client, &listing.refs.remove(0), &dir.path().join("cache")).unwrap();
    assert!(release.contains("pandas.read_excel"));
    assert!(matches!(client.list_releases("missing"), Err(IngestError::UnknownLibrary(_))));
}
