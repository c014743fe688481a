//! Trains the convolutional classifier on a synthetic corpus, saves a
//! checkpoint, reloads it and classifies a few held-out mentions.

use sentilex::eval::{generate, train_model, ExperimentConfig, SyntheticConfig};
use sentilex::io::MentionRecord;
use sentilex::lexicon::tokenize;
use sentilex::nn::checkpoint::{load_checkpoint, save_checkpoint};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate(&SyntheticConfig { mentions: 600, seed: 9, ..SyntheticConfig::default() })?;
    let (train, test) = corpus.records.split_at(500);
    let refs: Vec<&MentionRecord> = train.iter().collect();
    let config = ExperimentConfig::default();
    let trained = train_model(&config, &refs, None, 0)?;
    for (epoch, loss) in trained.epoch_losses.iter().enumerate().step_by(5) {
        println!("epoch {:>3}  loss {loss:.4}", epoch + 1);
    }

    let path = std::env::temp_dir().join("sentilex_example.ckpt");
    save_checkpoint(&trained.model, &trained.vocab, &path)?;
    let (model, vocab) = load_checkpoint(&path)?;

    let mut correct = 0;
    for r in test {
        let (label, _) = model.predict(&tokenize(&r.masked_text()), &vocab)?;
        correct += usize::from(label == r.label);
    }
    println!("\nheld-out accuracy {correct}/{}", test.len());
    for r in &test[..5] {
        let (label, dist) = model.predict(&tokenize(&r.masked_text()), &vocab)?;
        println!("{label:<9} (gold {:<9}) {:.3?}  {}", r.label, dist.probs(), r.text);
    }
    let _ = std::fs::remove_file(path);
    Ok(())
}
