use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use cobol_embed::abstraction::{abstract_sentence, AbstractionConfig, AbstractionMode, CorpusRecord};
use cobol_embed::corpus::{filter_by_length, split_train_test, MAX_LENGTH, MIN_LENGTH, TRAIN_RATIO};
use cobol_embed::frontend::ir::{program_records, IrRecord};
use cobol_embed::frontend::{Program, ReservedWords};

fn programs() -> Vec<Program> {
    let rw = ReservedWords::standard();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/minicorpus");
    ["accounts", "inventory", "payroll", "sales"]
        .iter()
        .map(|name| {
            let file = format!("{name}.cbl");
            Program::parse(&std::fs::read_to_string(dir.join(&file)).unwrap(), &file, &rw).unwrap()
        })
        .collect()
}

#[test]
fn minicorpus_shape() {
    let cfg = AbstractionConfig::default();
    let sentences: Vec<_> = programs()
        .iter()
        .flat_map(|p| p.sentences.iter().map(|s| abstract_sentence(s, &p.symbols, &cfg).unwrap()).collect::<Vec<_>>())
        .collect();
    let kept = filter_by_length(sentences, MIN_LENGTH, MAX_LENGTH).unwrap();
    assert_eq!(kept.len(), 66);
    let types: BTreeSet<&str> = kept.iter().map(|s| s.sentence_type.as_str()).collect();
    assert!(types.len() >= 10, "{types:?}");
    let (train, test) = split_train_test(&kept, TRAIN_RATIO, 0).unwrap();
    assert_eq!((train.len(), test.len()), (53, 13));
}

#[test]
fn ir_round_trip_preserves_abstraction() {
    for mode in [AbstractionMode::Single, AbstractionMode::Indexed] {
        let cfg = AbstractionConfig { mode, ..AbstractionConfig::default() };
        for p in programs() {
            for (sentence, record) in p.sentences.iter().zip(program_records(&p)) {
                let direct = abstract_sentence(sentence, &p.symbols, &cfg).unwrap();
                let json = serde_json::to_string(&record).unwrap();
                let back: IrRecord = serde_json::from_str(&json).unwrap();
                let tops: HashMap<String, String> = back
                    .tokens
                    .iter()
                    .filter_map(|t| Some((t.text.clone(), t.top.clone()?)))
                    .collect();
                let via_ir = abstract_sentence(&back.to_sentence(), &tops, &cfg).unwrap();
                assert_eq!(via_ir.tokens, direct.tokens);
                assert_eq!(via_ir.source_text, direct.source_text);

                let rec = CorpusRecord::new(7, &direct);
                let back: CorpusRecord = serde_json::from_str(&serde_json::to_string(&rec).unwrap()).unwrap();
                assert_eq!(back, rec);
            }
        }
    }
}

#[test]
fn indexed_mode_numbers_group_members_by_their_record() {
    let rw = ReservedWords::standard();
    let src = "\
000100 DATA DIVISION.
000200 WORKING-STORAGE SECTION.
000300 01 REC-A.
000400    05 FLD-A1 PIC 9.
000500    05 FLD-A2 PIC 9.
000600 01 REC-B PIC 9.
000700 PROCEDURE DIVISION.
000800     ADD FLD-A1 FLD-A2 TO REC-B.
";
    let p = Program::parse(src, "t.cbl", &rw).unwrap();
    let cfg = AbstractionConfig { mode: AbstractionMode::Indexed, ..AbstractionConfig::default() };
    let s = abstract_sentence(&p.sentences[1], &p.symbols, &cfg).unwrap();
    assert_eq!(s.tokens, ["ADD", "<VAR_0>", "<VAR_0>", "TO", "<VAR_1>"]);
}
