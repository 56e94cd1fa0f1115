//! Trains a codebook set on a synthetic corpus and reports distortion for
//! every codec version on a held-out corpus.
use std::time::Instant;

use cqnv::bitstream::CodecVersion;
use cqnv::codec::{train_all, TrainingOptions};
use cqnv::corpus::{analyze_corpus, generate_corpus, CorpusConfig};
use cqnv::metrics::{evaluate_quantizer, CodecQuantizer, ProfileQuantizer};

fn main() -> cqnv::Result<()> {
    let t = Instant::now();
    let train = analyze_corpus(&generate_corpus(&CorpusConfig::new(100, 1)))?;
    let test = analyze_corpus(&generate_corpus(&CorpusConfig::new(100, 2)))?;
    println!("analysis {:.1}s", t.elapsed().as_secs_f64());
    let (books, trained) = train_all(&train, &TrainingOptions::default())?;
    for b in &trained {
        println!("{} vectors={} distortion={:.6}", b.name, b.vectors, b.outcome.final_distortion);
    }
    println!("training {:.1}s", t.elapsed().as_secs_f64());
    for v in CodecVersion::ALL {
        let q = evaluate_quantizer(&ProfileQuantizer { books: &books, profile: v.profile() }, &test)?;
        let c = evaluate_quantizer(&CodecQuantizer { books: &books, version: v }, &test)?;
        println!("{v}: quantizer {:?}\n     codec {:?}", q, c);
    }
    println!("total {:.1}s", t.elapsed().as_secs_f64());
    Ok(())
}
