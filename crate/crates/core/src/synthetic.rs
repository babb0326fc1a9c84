//! Planted-topic corpora with topic-specific hashtag pools, for experiments
//! where the true topic of every document is known.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::RawDocument;

const TOPIC_NAMES: [&str; 12] = [
    "election", "football", "music", "cooking", "travel", "science", "weather", "cinema", "fashion",
    "gaming", "finance", "health",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedConfig {
    pub num_topics: usize,
    pub num_docs: usize,
    /// Distinct words owned by each topic.
    pub words_per_topic: usize,
    /// Size of the vocabulary shared by all topics.
    pub noise_words: usize,
    /// Probability that a word slot is drawn from the shared vocabulary.
    pub noise_share: f64,
    /// Inclusive range of plain words per document.
    pub min_words: usize,
    pub max_words: usize,
    /// Hashtags per document are uniform in `0..=max_hashtags`.
    pub max_hashtags: usize,
    pub tags_per_topic: usize,
    /// Probability that a hashtag comes from another topic's pool.
    pub contamination: f64,
    /// Zipf exponent for word and tag popularity within a pool.
    pub zipf_exponent: f64,
    /// Topic prevalence follows rank^-topic_skew; 0 gives equal-sized topics.
    pub topic_skew: f64,
    pub retweet_share: f64,
    pub reply_share: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            num_topics: 5,
            num_docs: 2000,
            words_per_topic: 300,
            noise_words: 60,
            noise_share: 0.3,
            min_words: 3,
            max_words: 8,
            max_hashtags: 3,
            tags_per_topic: 8,
            contamination: 0.2,
            zipf_exponent: 0.5,
            topic_skew: 0.0,
            retweet_share: 0.0,
            reply_share: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCorpus {
    pub documents: Vec<RawDocument>,
    /// Planted topic of each document.
    pub topics: Vec<usize>,
}

fn topic_name(t: usize) -> String {
    match TOPIC_NAMES.get(t) {
        Some(name) => name.to_string(),
        None => format!("topic{t}x"),
    }
}

fn zipf(n: usize, s: f64) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=n).map(|r| (r as f64).powf(-s))).expect("non-empty pool")
}

pub fn planted_corpus(cfg: &PlantedConfig) -> PlantedCorpus {
    assert!(cfg.num_topics >= 1 && cfg.words_per_topic >= 1 && cfg.tags_per_topic >= 1);
    assert!(cfg.min_words <= cfg.max_words);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let topic_words = zipf(cfg.words_per_topic, cfg.zipf_exponent);
    let noise = (cfg.noise_words > 0).then(|| zipf(cfg.noise_words, cfg.zipf_exponent));
    let tags = zipf(cfg.tags_per_topic, cfg.zipf_exponent);
    let prevalence = zipf(cfg.num_topics, cfg.topic_skew);

    let mut documents = Vec::with_capacity(cfg.num_docs);
    let mut topics = Vec::with_capacity(cfg.num_docs);
    for d in 0..cfg.num_docs {
        let topic = prevalence.sample(&mut rng);
        let name = topic_name(topic);
        let len = rng.random_range(cfg.min_words..=cfg.max_words);
        let mut words: Vec<String> = (0..len)
            .map(|_| match &noise {
                Some(noise) if rng.random::<f64>() < cfg.noise_share => {
                    format!("common{}", noise.sample(&mut rng))
                }
                _ => format!("{name}{}", topic_words.sample(&mut rng)),
            })
            .collect();
        let n_tags = rng.random_range(0..=cfg.max_hashtags);
        for _ in 0..n_tags {
            let source = if cfg.num_topics > 1 && rng.random::<f64>() < cfg.contamination {
                let other = rng.random_range(0..cfg.num_topics - 1);
                if other >= topic {
                    other + 1
                } else {
                    other
                }
            } else {
                topic
            };
            words.push(format!("#{}tag{}", topic_name(source), tags.sample(&mut rng)));
        }
        let is_retweet = rng.random::<f64>() < cfg.retweet_share;
        let in_reply_to = (rng.random::<f64>() < cfg.reply_share).then(|| format!("doc{}", d / 2));
        documents.push(RawDocument {
            id: format!("doc{d:05}"),
            text: words.join(" "),
            is_retweet,
            in_reply_to,
            created_at: None,
        });
        topics.push(topic);
    }
    PlantedCorpus { documents, topics }
}
