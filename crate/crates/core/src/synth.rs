//! Deterministic synthetic patent corpora with matching embeddings, for
//! smoke runs and benchmarks.
//!
//! Each family draws a latent vector near its topic centroid. Texts mix
//! topic words, family keywords and common words; citations mostly stay
//! within a topic. A system's embedding of a document is the family latent
//! plus per-document, per-system and per-view noise, so better systems
//! (less noise) retrieve cited families more often.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::corpus::{CitationEdge, Corpus, Document, Section};
use crate::dense::EmbeddingMatrix;
use crate::error::{Error, Result};

const JURISDICTIONS: [&str; 10] = ["US", "CN", "JP", "DE", "EP", "FR", "KR", "ES", "RU", "WO"];
const TOPIC_CODES: [&str; 8] = ["H04", "G06", "A61", "B60", "C07", "F16", "H01", "G01"];
const SYLLABLES: [&str; 16] =
    ["ka", "lo", "mi", "ne", "ra", "su", "ti", "vo", "ze", "pa", "do", "gu", "shi", "ber", "tan", "ox"];
const COMMON: [&str; 24] = [
    "system",
    "method",
    "device",
    "unit",
    "module",
    "signal",
    "control",
    "surface",
    "layer",
    "member",
    "first",
    "second",
    "configured",
    "wherein",
    "plurality",
    "portion",
    "coupled",
    "based",
    "output",
    "input",
    "assembly",
    "element",
    "process",
    "apparatus",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_docs: usize,
    pub n_topics: usize,
    pub dim: usize,
    pub seed: u64,
    /// Share of citations that cross topics.
    pub cross_topic: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { n_docs: 200, n_topics: 6, dim: 32, seed: 42, cross_topic: 0.2 }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    pub edges: Vec<CitationEdge>,
    /// Per-document latent vector, in corpus order.
    latents: Vec<Vec<f64>>,
    seed: u64,
}

/// 64-bit FNV-1a, for stable per-name random streams.
fn fnv(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

fn gauss(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(2..=3);
    (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

fn sentence(rng: &mut ChaCha8Rng, len: usize, topic: &[String], keys: &[String]) -> String {
    (0..len)
        .map(|_| {
            let r: f64 = rng.gen();
            if r < 0.3 {
                keys.choose(rng).unwrap().as_str()
            } else if r < 0.65 {
                topic.choose(rng).unwrap().as_str()
            } else {
                COMMON.choose(rng).unwrap()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    if cfg.n_docs < 2 || cfg.n_topics == 0 || cfg.n_topics > TOPIC_CODES.len() || cfg.dim == 0 {
        return Err(Error::Config(format!(
            "synthetic corpus needs >= 2 docs, 1..={} topics and a positive dimension",
            TOPIC_CODES.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let vocab: Vec<Vec<String>> = (0..cfg.n_topics)
        .map(|_| {
            let mut words = BTreeSet::new();
            while words.len() < 40 {
                words.insert(word(&mut rng));
            }
            words.into_iter().collect()
        })
        .collect();
    let centroids: Vec<Vec<f64>> = (0..cfg.n_topics).map(|_| gauss(&mut rng, cfg.dim, 1.0)).collect();

    let mut docs = Vec::with_capacity(cfg.n_docs);
    let mut latents = Vec::with_capacity(cfg.n_docs);
    let mut family_topic: Vec<usize> = Vec::new();
    let mut serial = 1_000_000;
    while docs.len() < cfg.n_docs {
        let f = family_topic.len();
        let topic = rng.gen_range(0..cfg.n_topics);
        family_topic.push(topic);
        let family_id = format!("F{f:05}");
        let latent: Vec<f64> = centroids[topic].iter().zip(gauss(&mut rng, cfg.dim, 0.6)).map(|(c, n)| c + n).collect();
        let keys: Vec<String> = (0..5).map(|_| vocab[topic].choose(&mut rng).unwrap().clone()).collect();
        let fine = format!("{}{}", TOPIC_CODES[topic], ["A", "B"][rng.gen_range(0..2)]);
        let members = rng.gen_range(1..=3).min(cfg.n_docs - docs.len());
        let mut jur: Vec<&str> = JURISDICTIONS.to_vec();
        jur.shuffle(&mut rng);
        for &cc in &jur[..members] {
            serial += rng.gen_range(1..50);
            let mut d = Document {
                doc_id: format!("{cc}{serial}A1"),
                family_id: family_id.clone(),
                ipc3: vec![TOPIC_CODES[topic].to_string()],
                ..Default::default()
            };
            let t = &vocab[topic];
            let title_len = rng.gen_range(4..7);
            d.sections.insert(Section::Title, sentence(&mut rng, title_len, t, &keys));
            d.sections.insert(Section::Abstract, sentence(&mut rng, 40, t, &keys));
            let c1 = sentence(&mut rng, 25, t, &keys);
            let c2 = sentence(&mut rng, 15, t, &keys);
            d.sections.insert(Section::Claims, format!("1. {c1}. 2. The {c2}."));
            d.sections.insert(Section::Claim1, format!("1. {c1}."));
            if rng.gen_bool(0.5) {
                d.sections.insert(Section::DwpiTitle, sentence(&mut rng, 6, t, &keys));
                d.sections.insert(Section::DwpiNovelty, sentence(&mut rng, 20, t, &keys));
                d.sections.insert(Section::DwpiUse, sentence(&mut rng, 10, t, &keys));
            }
            d.add_label("ipc_fine", &fine);
            d.add_label("ipc_coarse", TOPIC_CODES[topic]);
            docs.push(d);
            latents.push(latent.clone());
        }
    }

    let n_families = family_topic.len();
    let mut edges = BTreeSet::new();
    for f in 1..n_families {
        let n_cites = rng.gen_range(1..=3);
        for _ in 0..n_cites {
            let same = !rng.gen_bool(cfg.cross_topic);
            let pool: Vec<usize> = (0..f).filter(|&g| (family_topic[g] == family_topic[f]) == same).collect();
            if let Some(&g) = pool.choose(&mut rng) {
                edges.insert(CitationEdge::new(format!("F{f:05}"), format!("F{g:05}")));
            }
        }
    }
    let edges: Vec<CitationEdge> = edges.into_iter().collect();
    let corpus = Corpus::from_documents(docs)?.with_citations(edges.clone(), true)?;
    Ok(SynthCorpus { corpus, edges, latents, seed: cfg.seed })
}

impl SynthCorpus {
    /// Embeddings of every document for `system` under `view`: latent plus
    /// Gaussian noise of scale `noise`, L2-normalized.
    pub fn embed(&self, system: &str, view: &str, noise: f64) -> Result<EmbeddingMatrix> {
        let dim = self.latents.first().map_or(0, Vec::len);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv(system));
        rng.set_stream(fnv(view));
        let mut data = Vec::with_capacity(self.latents.len() * dim);
        for latent in &self.latents {
            for (l, n) in latent.iter().zip(gauss(&mut rng, dim, noise)) {
                data.push((l + n) as f32);
            }
        }
        let ids = self.corpus.docs().iter().map(|d| d.doc_id.clone()).collect();
        Ok(EmbeddingMatrix::from_rows(ids, dim, data)?.normalized())
    }
}
