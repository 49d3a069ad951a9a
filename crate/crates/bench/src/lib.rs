//! Deterministic fixture builders shared by the benchmarks. Everything here
//! is generated by cycling fixed character banks, so repeated runs measure
//! the same inputs.

use rllm_core::{ScriptedBackend, Utterance};

const REFERENCE_BANK: &str = "的一是了我不人在他有这上们来到时大地为子中你说生国年着就那和要她出也得里后自以会家可下而过天去能对小多然于心学么之都好看起发当没成只如事把还用第样道想作种开";
const SUBSTITUTE_BANK: &str = "气汽期器记级机几给该感刚高哥歌格个各根跟更工公功共狗古故顾瓜挂关观管光广规鬼贵国果";

fn cycle(bank: &str, start: usize, len: usize) -> String {
    bank.chars().cycle().skip(start).take(len).collect()
}

/// Mandarin reference/hypothesis pair of `chars` characters where every
/// tenth character of the hypothesis is substituted.
pub fn mandarin_pair(chars: usize) -> (String, String) {
    let reference = cycle(REFERENCE_BANK, 0, chars);
    let substitutes: Vec<char> = SUBSTITUTE_BANK.chars().collect();
    let hypothesis = reference
        .chars()
        .enumerate()
        .map(|(i, c)| if i % 10 == 9 { substitutes[i % substitutes.len()] } else { c })
        .collect();
    (reference, hypothesis)
}

/// Corpus of `n` Mandarin utterances with ids `u000`, `u001`, ...
pub fn scripted_corpus(n: usize) -> Vec<Utterance> {
    (0..n)
        .map(|i| Utterance {
            id: format!("u{i:03}"),
            hypothesis: cycle(REFERENCE_BANK, i, 12),
            reference: None,
            language: Default::default(),
        })
        .collect()
}

fn cot_reply(answer: &str) -> String {
    format!(
        "Localization: the third character is wrong\n\
         Pronunciation: both read alike\n\
         Candidates:\n- {answer}\n\
         Selection: {answer} fits the context\n\
         <answer>{answer}</answer>"
    )
}

/// Script for a full-mode run over `corpus`: even positions pass detection
/// clean, odd positions are flagged and corrected in one confident step.
pub fn full_mode_backend(corpus: &[Utterance]) -> ScriptedBackend {
    let backend = ScriptedBackend::new();
    for (i, utterance) in corpus.iter().enumerate() {
        if i % 2 == 0 {
            backend.push(format!("detect:{}", utterance.id), "NO_ERROR");
        } else {
            backend.push(format!("detect:{}", utterance.id), "HAS_ERROR");
            backend.push(
                format!("correct:{}", utterance.id),
                cot_reply(&cycle(SUBSTITUTE_BANK, i, 12)).as_str(),
            );
            backend.push(format!("confidence:{}", utterance.id), "PREFER_NEW");
        }
    }
    backend
}

/// Input/output/reference triples covering every classifier rule plus the
/// identity fast path.
pub fn classifier_pairs() -> Vec<(String, String, Option<String>)> {
    let (reference, hypothesis) = mandarin_pair(24);
    let echo = format!("修正后的句子是：{hypothesis}");
    let run = "好".repeat(30);
    let continued = format!("{hypothesis}{}", cycle(REFERENCE_BANK, 40, 36));
    vec![
        (hypothesis.clone(), hypothesis.clone(), None),
        (hypothesis.clone(), String::new(), None),
        (hypothesis.clone(), run, None),
        (hypothesis.clone(), "抱歉，我无法回答这个问题。".to_string(), None),
        (hypothesis.clone(), echo, None),
        (hypothesis.clone(), continued, None),
        (reference.clone(), hypothesis.clone(), Some(reference.clone())),
        (hypothesis, reference.clone(), Some(reference)),
    ]
}
