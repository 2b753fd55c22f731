//! Developer identity folding and firm affiliation.
//!
//! Affiliation is resolved with a fixed precedence: bot list, then explicit
//! per-email overrides, then email-domain rules, and finally
//! [`UNAFFILIATED`]. Domain rules match the email's domain or any parent
//! domain (`us.ibm.com` falls back to a rule for `ibm.com`); the most
//! specific rule wins.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::ingest::{is_well_formed_email, CommitRecord};

/// Firm sentinel for developers no rule maps to a firm.
pub const UNAFFILIATED: &str = "Unaffiliated";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdentityError {
    #[error("affiliations line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("conflicting affiliation for {key:?}: {first:?} vs {second:?}")]
    ConflictingRule {
        key: String,
        first: String,
        second: String,
    },
    #[error("{email:?} appears in more than one alias group")]
    DuplicateAlias { email: String },
    #[error("{email:?} is listed as a bot and as an alias group member")]
    BotInAliasGroup { email: String },
    #[error("alias group {group:?} resolves to several firms: {firms:?}")]
    AmbiguousAffiliation {
        group: Vec<String>,
        firms: Vec<String>,
    },
}

/// Parsed affiliation configuration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AffiliationMap {
    domain_rules: BTreeMap<String, String>,
    email_overrides: BTreeMap<String, String>,
    alias_groups: Vec<BTreeSet<String>>,
    alias_index: BTreeMap<String, usize>,
    bot_emails: BTreeSet<String>,
}

/// Result of resolving a single email.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Affiliation {
    Excluded,
    Firm(String),
    Unaffiliated,
}

impl Affiliation {
    pub fn firm(&self) -> Option<&str> {
        match self {
            Affiliation::Firm(f) => Some(f),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Domains,
    Emails,
    Aliases,
    Bots,
}

fn insert_rule(
    map: &mut BTreeMap<String, String>,
    key: String,
    firm: String,
) -> Result<(), IdentityError> {
    match map.get(&key) {
        Some(existing) if *existing != firm => Err(IdentityError::ConflictingRule {
            key,
            first: existing.clone(),
            second: firm,
        }),
        _ => {
            map.insert(key, firm);
            Ok(())
        }
    }
}

impl AffiliationMap {
    pub fn builder() -> AffiliationMapBuilder {
        AffiliationMapBuilder::default()
    }

    pub fn domain_rules(&self) -> &BTreeMap<String, String> {
        &self.domain_rules
    }

    pub fn email_overrides(&self) -> &BTreeMap<String, String> {
        &self.email_overrides
    }

    pub fn alias_groups(&self) -> &[BTreeSet<String>] {
        &self.alias_groups
    }

    pub fn bot_emails(&self) -> &BTreeSet<String> {
        &self.bot_emails
    }

    /// Every firm named by a domain rule or override.
    pub fn firms(&self) -> BTreeSet<String> {
        self.domain_rules
            .values()
            .chain(self.email_overrides.values())
            .cloned()
            .collect()
    }

    /// Alias group containing `email`, if any.
    pub fn group_of(&self, email: &str) -> Option<&BTreeSet<String>> {
        self.alias_index.get(email).map(|&i| &self.alias_groups[i])
    }

    fn domain_firm(&self, email: &str) -> Option<&str> {
        if !is_well_formed_email(email) {
            return None;
        }
        let (_, mut domain) = email.rsplit_once('@')?;
        loop {
            if let Some(firm) = self.domain_rules.get(domain) {
                return Some(firm);
            }
            domain = domain.split_once('.')?.1;
        }
    }
}

/// Programmatic construction with the same checks as [`load_affiliation_map`].
#[derive(Debug, Default)]
pub struct AffiliationMapBuilder {
    map: AffiliationMap,
}

impl AffiliationMapBuilder {
    pub fn domain(mut self, domain: &str, firm: &str) -> Result<Self, IdentityError> {
        insert_rule(
            &mut self.map.domain_rules,
            domain.trim().to_lowercase(),
            firm.trim().to_string(),
        )?;
        Ok(self)
    }

    pub fn email(mut self, email: &str, firm: &str) -> Result<Self, IdentityError> {
        insert_rule(
            &mut self.map.email_overrides,
            email.trim().to_lowercase(),
            firm.trim().to_string(),
        )?;
        Ok(self)
    }

    pub fn alias_group<I, S>(mut self, emails: I) -> Result<Self, IdentityError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let group: BTreeSet<String> = emails
            .into_iter()
            .map(|e| e.as_ref().trim().to_lowercase())
            .filter(|e| !e.is_empty())
            .collect();
        if group.is_empty() {
            return Ok(self);
        }
        let index = self.map.alias_groups.len();
        for email in &group {
            if self.map.alias_index.insert(email.clone(), index).is_some() {
                return Err(IdentityError::DuplicateAlias {
                    email: email.clone(),
                });
            }
        }
        self.map.alias_groups.push(group);
        Ok(self)
    }

    pub fn bot(mut self, email: &str) -> Self {
        self.map.bot_emails.insert(email.trim().to_lowercase());
        self
    }

    pub fn build(self) -> Result<AffiliationMap, IdentityError> {
        if let Some(email) = self
            .map
            .bot_emails
            .iter()
            .find(|b| self.map.alias_index.contains_key(*b))
        {
            return Err(IdentityError::BotInAliasGroup {
                email: email.clone(),
            });
        }
        Ok(self.map)
    }
}

/// Parses the INI-like affiliation config.
///
/// ```text
/// [domains]
/// hp.com = HP
/// [emails]
/// dev1@gmail.com = HP
/// [aliases]
/// dev1@gmail.com, dev1@hp.com
/// [bots]
/// ci-bot@project.org
/// ```
pub fn load_affiliation_map(config: &str) -> Result<AffiliationMap, IdentityError> {
    let mut builder = AffiliationMap::builder();
    let mut section = None;
    for (idx, raw_line) in config.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.split_once('#') {
            Some((before, _)) => before,
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |reason: &str| IdentityError::Syntax {
            line: line_no,
            reason: reason.to_string(),
        };
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = Some(match name.trim() {
                "domains" => Section::Domains,
                "emails" => Section::Emails,
                "aliases" => Section::Aliases,
                "bots" => Section::Bots,
                other => return Err(syntax(&format!("unknown section [{other}]"))),
            });
            continue;
        }
        match section {
            None => return Err(syntax("entry outside of any section")),
            Some(Section::Domains | Section::Emails) => {
                let (key, firm) = line
                    .split_once('=')
                    .ok_or_else(|| syntax("expected key = firm"))?;
                let (key, firm) = (key.trim(), firm.trim());
                if key.is_empty() || firm.is_empty() {
                    return Err(syntax("empty key or firm"));
                }
                if firm == UNAFFILIATED {
                    return Err(syntax("\"Unaffiliated\" is reserved"));
                }
                builder = if section == Some(Section::Domains) {
                    builder.domain(key, firm)?
                } else {
                    builder.email(key, firm)?
                };
            }
            Some(Section::Aliases) => {
                builder = builder.alias_group(line.split(','))?;
            }
            Some(Section::Bots) => builder = builder.bot(line),
        }
    }
    builder.build()
}

/// Resolves a lowercase email to its firm.
pub fn resolve_affiliation(email: &str, map: &AffiliationMap) -> Affiliation {
    if map.bot_emails.contains(email) {
        Affiliation::Excluded
    } else if let Some(firm) = map.email_overrides.get(email) {
        Affiliation::Firm(firm.clone())
    } else if let Some(firm) = map.domain_firm(email) {
        Affiliation::Firm(firm.to_string())
    } else {
        Affiliation::Unaffiliated
    }
}

/// A developer after alias folding.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct DeveloperIdentity {
    pub canonical_id: String,
    pub emails: BTreeSet<String>,
    pub firm: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    Bot,
    MissingEmail,
    InvalidEmail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExcludedCommit {
    pub sha: String,
    pub reason: ExclusionReason,
}

/// Output of [`canonicalize_identities`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Identities {
    by_email: BTreeMap<String, DeveloperIdentity>,
    pub excluded: Vec<ExcludedCommit>,
}

impl Identities {
    pub fn get(&self, email: &str) -> Option<&DeveloperIdentity> {
        self.by_email.get(email)
    }

    pub fn by_email(&self) -> &BTreeMap<String, DeveloperIdentity> {
        &self.by_email
    }

    /// Distinct identities, ordered by canonical id.
    pub fn developers(&self) -> BTreeMap<&str, &DeveloperIdentity> {
        self.by_email
            .values()
            .map(|d| (d.canonical_id.as_str(), d))
            .collect()
    }

    pub fn excluded_shas(&self) -> BTreeSet<&str> {
        self.excluded.iter().map(|e| e.sha.as_str()).collect()
    }

    /// Commits per canonical id; excluded commits are not counted.
    pub fn commit_counts(&self, records: &[CommitRecord]) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for r in records {
            if let Some(dev) = self.by_email.get(&r.author_email) {
                *counts.entry(dev.canonical_id.clone()).or_insert(0) += 1;
            }
        }
        counts
    }
}

/// Firm of a whole alias group (or a lone email).
///
/// Overrides pin the group and must agree. Otherwise the distinct firms that
/// domain rules give the members must number at most one; members resolving
/// to no firm do not count as disagreement.
fn group_firm(
    members: &BTreeSet<String>,
    map: &AffiliationMap,
) -> Result<Affiliation, IdentityError> {
    let pinned: BTreeSet<&String> = members
        .iter()
        .filter_map(|m| map.email_overrides.get(m))
        .collect();
    let firms: BTreeSet<&str> = if pinned.is_empty() {
        members.iter().filter_map(|m| map.domain_firm(m)).collect()
    } else {
        pinned.into_iter().map(String::as_str).collect()
    };
    match firms.len() {
        0 => Ok(Affiliation::Unaffiliated),
        1 => Ok(Affiliation::Firm(
            firms.into_iter().next().expect("one firm").to_string(),
        )),
        _ => Err(IdentityError::AmbiguousAffiliation {
            group: members.iter().cloned().collect(),
            firms: firms.into_iter().map(str::to_string).collect(),
        }),
    }
}

fn has_override(members: &BTreeSet<String>, map: &AffiliationMap) -> bool {
    members.iter().any(|m| map.email_overrides.contains_key(m))
}

/// Folds aliases and attaches one firm to every developer seen in `records`.
///
/// Records by bot emails are excluded. Records with a missing email are
/// always excluded; records with a malformed email are kept only when an
/// explicit override covers the email or its alias group.
pub fn canonicalize_identities(
    records: &[CommitRecord],
    map: &AffiliationMap,
) -> Result<Identities, IdentityError> {
    let mut identities = Identities::default();
    for record in records {
        let email = &record.author_email;
        if identities.by_email.contains_key(email) {
            continue;
        }
        let exclusion = if email.is_empty() {
            Some(ExclusionReason::MissingEmail)
        } else if map.bot_emails.contains(email) {
            Some(ExclusionReason::Bot)
        } else {
            None
        };
        if let Some(reason) = exclusion {
            identities.excluded.push(ExcludedCommit {
                sha: record.sha.clone(),
                reason,
            });
            continue;
        }
        let members = match map.group_of(email) {
            Some(group) => group.clone(),
            None => BTreeSet::from([email.clone()]),
        };
        if !is_well_formed_email(email) && !has_override(&members, map) {
            identities.excluded.push(ExcludedCommit {
                sha: record.sha.clone(),
                reason: ExclusionReason::InvalidEmail,
            });
            continue;
        }
        let firm = match group_firm(&members, map)? {
            Affiliation::Firm(f) => f,
            _ => UNAFFILIATED.to_string(),
        };
        let identity = DeveloperIdentity {
            canonical_id: members.iter().next().expect("non-empty group").clone(),
            emails: members,
            firm,
        };
        identities.by_email.insert(email.clone(), identity);
    }
    Ok(identities)
}

/// Rewrites each attributable record's email to its canonical id.
pub fn apply_canonical_ids(records: &[CommitRecord], identities: &Identities) -> Vec<CommitRecord> {
    records
        .iter()
        .filter_map(|r| {
            identities.get(&r.author_email).map(|dev| CommitRecord {
                author_email: dev.canonical_id.clone(),
                ..r.clone()
            })
        })
        .collect()
}
