use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ddsrecon::capture::{
    decode_adapter, load_capture, CaptureCodec, CaptureError, CaptureRecord, Guid, JsonLines, ParticipantDatabase,
};
use ddsrecon::netsim::{random_permissions, PolicyShape};
use ddsrecon::permissions::serialize_permissions;
use ddsrecon::time::Timestamp;

const TALKER: &str = r#"<dds><permissions><grant name="talker">
  <subject_name>CN=talker</subject_name>
  <validity><not_before>2020-01-01T00:00:00</not_before><not_after>2030-01-01T00:00:00</not_after></validity>
  <allow_rule><domains><id>0</id></domains><publish><topics><topic>chatter</topic></topics></publish></allow_rule>
  <default>DENY</default>
</grant></permissions></dds>"#;

const TALKER_V2: &str = r#"<dds><permissions><grant name="talker">
  <subject_name>CN=talker</subject_name>
  <validity><not_before>2020-01-01T00:00:00</not_before><not_after>2030-01-01T00:00:00</not_after></validity>
  <allow_rule><domains><id>0</id></domains><publish><topics><topic>chatter*</topic></topics></publish></allow_rule>
  <default>DENY</default>
</grant></permissions></dds>"#;

fn guid(n: u8) -> Guid {
    let mut g = [0u8; 16];
    g[15] = n;
    Guid(g)
}

fn record(n: u8, t: i64, source: &str, doc: &str) -> CaptureRecord {
    CaptureRecord {
        timestamp: Timestamp::from_unix(t),
        source_address: source.into(),
        destination_address: "239.255.0.1:7400".into(),
        participant_guid: guid(n),
        subject_name: "CN=talker".into(),
        permissions_document: doc.as_bytes().to_vec(),
    }
}

#[test]
fn endpoints_accumulate_per_guid() {
    let records = [record(1, 10, "10.0.0.1:7410", TALKER), record(1, 20, "10.0.0.2:7410", TALKER)];
    let (db, anomalies) = load_capture(&records, &ParticipantDatabase::new()).unwrap();
    assert!(anomalies.is_empty());
    assert_eq!(db.len(), 1);
    let p = db.get(&guid(1)).unwrap();
    assert_eq!(p.endpoints.iter().collect::<Vec<_>>(), ["10.0.0.1:7410", "10.0.0.2:7410"]);
    assert_eq!((p.first_seen.unix(), p.last_seen.unix()), (10, 20));
}

#[test]
fn short_guid_is_reported_with_record_index() {
    let good = JsonLines.encode(&[record(1, 10, "a:1", TALKER)]);
    let bad = String::from_utf8(good.clone()).unwrap().replace(&guid(1).to_string(), &"0".repeat(30));
    let stream = [good, bad.into_bytes()].concat();
    match decode_adapter(&stream, "jsonl") {
        Err(CaptureError::MalformedRecord { index, message }) => {
            assert_eq!(index, 1);
            assert!(message.contains("guid"), "{message}");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn broken_document_names_the_guid() {
    let r = record(7, 1, "a:1", "<dds><permissions>");
    let err = load_capture(&[record(1, 1, "a:1", TALKER), r], &ParticipantDatabase::new()).unwrap_err();
    match &err {
        CaptureError::Permissions { index, guid: g, .. } => assert_eq!((*index, *g), (1, guid(7))),
        other => panic!("unexpected {other:?}"),
    }
    assert!(err.to_string().contains(&guid(7).to_string()));
}

#[test]
fn conflicting_documents_are_anomalies() {
    let (db, anomalies) = load_capture(
        &[record(1, 50, "a:1", TALKER_V2), record(1, 10, "a:1", TALKER), record(1, 60, "a:1", TALKER)],
        &ParticipantDatabase::new(),
    )
    .unwrap();
    assert_eq!(anomalies.len(), 1);
    assert!(anomalies[0].rejected_document.contains("chatter*"));
    let kept = &db.get(&guid(1)).unwrap().permissions;
    assert_eq!(kept.grants[0].rules[0].publish.as_ref().unwrap().topics[0].source(), "chatter");
}

#[test]
fn codec_registry() {
    assert!(matches!(decode_adapter(b"", "rtps"), Err(CaptureError::UnknownCodec(n)) if n == "rtps"));
    assert!(decode_adapter(b"", "jsonl").unwrap().is_empty());
    let records = vec![record(1, 10, "a:1", TALKER), record(2, 11, "b:1", TALKER_V2)];
    assert_eq!(decode_adapter(&JsonLines.encode(&records), "jsonl").unwrap(), records);
}

#[test]
fn database_file_round_trip() {
    let (db, _) = load_capture(
        &[record(1, 10, "a:1", TALKER), record(1, 20, "a:1", TALKER_V2), record(2, 5, "b:1", TALKER)],
        &ParticipantDatabase::new(),
    )
    .unwrap();
    let text = db.to_json();
    assert_eq!(ParticipantDatabase::from_json(&text).unwrap(), db);
    assert_eq!(db.anomalies().count(), 1);
}

#[test]
fn resolve_identifiers() {
    let mut r2 = record(2, 5, "b:1", TALKER);
    r2.subject_name = r"CN=5\,0".into();
    let (db, _) = load_capture(&[record(1, 10, "a:1", TALKER), r2], &ParticipantDatabase::new()).unwrap();
    assert_eq!(db.resolve(&guid(1).to_string()).unwrap(), guid(1));
    assert_eq!(db.resolve("CN=talker").unwrap(), guid(1));
    assert_eq!(db.resolve("5,0").unwrap(), guid(2));
    assert!(matches!(db.resolve("nobody"), Err(CaptureError::UnknownParticipant(_))));
}

fn random_records(seed: u64) -> Vec<CaptureRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = PolicyShape::default();
    let docs: Vec<Vec<u8>> = (0..3)
        .map(|i| serialize_permissions(&random_permissions(&mut rng, &format!("CN=p{i}"), &shape)))
        .collect();
    (0..12u8)
        .map(|i| {
            let n = i % 4;
            let doc = &docs[usize::from(i * 7 % 3)];
            let subject = ddsrecon::permissions::parse_permissions(doc).unwrap().subject_name().to_owned();
            CaptureRecord {
                timestamp: Timestamp::from_unix(i64::from(i % 5)),
                source_address: format!("10.0.0.{}:74{}", n, i % 3),
                destination_address: "239.255.0.1:7400".into(),
                participant_guid: guid(n),
                subject_name: subject,
                permissions_document: doc.clone(),
            }
        })
        .collect()
}

proptest! {
    #[test]
    fn load_order_does_not_matter(seed in any::<u64>(), split in 0usize..12) {
        let records = random_records(seed);
        let (all, _) = load_capture(&records, &ParticipantDatabase::new()).unwrap();

        let mut shuffled = records.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
        let (first, _) = load_capture(&shuffled[..split], &ParticipantDatabase::new()).unwrap();
        let (both, _) = load_capture(&shuffled[split..], &first).unwrap();
        prop_assert_eq!(&both, &all);
        prop_assert_eq!(ParticipantDatabase::from_json(&all.to_json()).unwrap(), all);
    }
}
