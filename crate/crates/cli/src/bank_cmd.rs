use std::cmp::Ordering;

use anyhow::{bail, Context};
use envsniff::bank::{diff_releases, load_bank, save_index, save_release, ApiBank, CallSignature};
use envsniff::ingest::{ingest_many, IndexClient, IngestError, ReleaseRef, UnindexedReport};
use envsniff::version::compare_versions;

use crate::config::CliConfig;

/// Which versions of a library `bank add` takes.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Selector {
    All,
    Latest,
    Last(usize),
    Exact(Vec<String>),
}

impl Selector {
    fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(match text.trim() {
            "all" => Selector::All,
            "latest" => Selector::Latest,
            t => match t.strip_prefix("last:") {
                Some(n) => Selector::Last(n.parse().with_context(|| format!("bad count in `{t}`"))?),
                None => Selector::Exact(t.split(',').map(|v| v.trim().to_string()).collect()),
            },
        })
    }

    fn apply(&self, refs: Vec<ReleaseRef>) -> (Vec<ReleaseRef>, Vec<String>) {
        match self {
            Selector::All => (refs, Vec::new()),
            Selector::Latest => (refs.into_iter().last().into_iter().collect(), Vec::new()),
            Selector::Last(n) => {
                let skip = refs.len().saturating_sub(*n);
                (refs.into_iter().skip(skip).collect(), Vec::new())
            }
            Selector::Exact(wanted) => {
                let missing = wanted
                    .iter()
                    .filter(|w| !refs.iter().any(|r| &r.version == *w))
                    .cloned()
                    .collect();
                (refs.into_iter().filter(|r| wanted.contains(&r.version)).collect(), missing)
            }
        }
    }
}

fn open_bank(config: &CliConfig) -> anyhow::Result<ApiBank> {
    load_bank(&config.bank_dir).with_context(|| format!("loading bank {}", config.bank_dir.display()))
}

pub fn add(config: &CliConfig, libraries: &[String], versions: &str) -> anyhow::Result<u8> {
    let default_selector = Selector::parse(versions)?;
    std::fs::create_dir_all(&config.bank_dir)?;
    let mut bank = open_bank(config)?;
    let client = IndexClient::new(&config.index_base_url);
    let mut report = UnindexedReport::default();
    let mut pending: Vec<ReleaseRef> = Vec::new();
    let mut cached = 0usize;

    for spec in libraries {
        let (name, selector) = match spec.split_once("==") {
            Some((n, v)) => (n.trim(), Selector::Exact(vec![v.trim().to_string()])),
            None => (spec.trim(), default_selector.clone()),
        };
        let listing = match client.list_releases(name) {
            Ok(l) => l,
            Err(IngestError::UnknownLibrary(_)) => {
                println!("unknown library {name}");
                report.record(name);
                continue;
            }
            Err(e) => {
                println!("failed {name}: {e}");
                continue;
            }
        };
        for s in &listing.skipped {
            println!("skipped {name} {}: {}", s.version, s.reason);
        }
        let (refs, missing) = selector.apply(listing.refs);
        for v in missing {
            println!("missing {name} {v}: not published with a usable archive");
        }
        for r in refs {
            if bank.contains_release(&r.library, &r.version) {
                println!("cached {} {}", r.library, r.version);
                cached += 1;
            } else {
                pending.push(r);
            }
        }
    }

    let mut ingested = 0usize;
    for outcome in ingest_many(&client, &pending, &config.cache_dir, config.parallelism) {
        let r = &outcome.release;
        match outcome.result {
            Ok(release) => {
                println!(
                    "ingested {} {} ({} APIs, {} aliases, {} of {} modules unparsable)",
                    r.library,
                    r.version,
                    release.apis.len(),
                    release.alias_map.len(),
                    release.stats.modules_failed,
                    release.stats.modules_total
                );
                save_release(&config.bank_dir, &release)?;
                bank.insert(release)?;
                ingested += 1;
            }
            Err(e) => println!("failed {} {}: {e}", r.library, r.version),
        }
    }
    if ingested > 0 {
        save_index(&config.bank_dir, &bank.index)?;
    }
    if !report.is_empty() {
        println!(
            "unindexed_modules: {}",
            report.unindexed_modules.iter().cloned().collect::<Vec<_>>().join(", ")
        );
    }
    println!("{ingested} ingested, {cached} already in the bank");
    Ok(if ingested + cached == 0 { 1 } else { 0 })
}

pub fn list(config: &CliConfig) -> anyhow::Result<u8> {
    let bank = open_bank(config)?;
    for library in bank.index.libraries() {
        println!("{library}: {}", bank.index.versions_of(library).join(" "));
    }
    println!(
        "{} releases, {} APIs, identity {}",
        bank.index.release_count,
        bank.index.api_count,
        bank.index.identity()
    );
    Ok(0)
}

pub fn query(config: &CliConfig, fqn: &str, keywords: &[String]) -> anyhow::Result<u8> {
    let bank = open_bank(config)?;
    let call = (!keywords.is_empty()).then(|| CallSignature {
        positional: 0,
        keywords: keywords.to_vec(),
    });
    let hits = bank.index.query(fqn, call.as_ref());
    if hits.is_empty() {
        eprintln!("no release provides {fqn}");
        return Ok(2);
    }
    for (library, version) in hits {
        println!("{library}=={version}");
    }
    Ok(0)
}

pub fn diff(config: &CliConfig, library: &str, v1: &str, v2: &str) -> anyhow::Result<u8> {
    let bank = open_bank(config)?;
    let (mut old, mut new) = (v1, v2);
    if compare_versions(v1, v2) == Ordering::Greater {
        eprintln!("note: {v1} is newer than {v2}; comparing {v2} -> {v1}");
        std::mem::swap(&mut old, &mut new);
    }
    let Some(a) = bank.get(library, old) else {
        bail!("{library} {old} is not in the bank");
    };
    let Some(b) = bank.get(library, new) else {
        bail!("{library} {new} is not in the bank");
    };
    let d = diff_releases(a, b)?;
    println!("{} {old} -> {new}", a.library);
    println!("added ({}):", d.added.len());
    for name in &d.added {
        println!("  {name}");
    }
    println!("removed ({}):", d.removed.len());
    for name in &d.removed {
        println!("  {name}");
    }
    println!("param_changed ({}):", d.param_changed.len());
    for change in &d.param_changed {
        println!("  {}", change.fqn);
    }
    Ok(0)
}
