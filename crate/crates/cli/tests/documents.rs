use abnet_cli::document::{DocError, FamilyKind, Model, NetworkDocument};
use abnet_core::spectra::{sandpilize, ProductionData};
use abnet_core::zoo;

fn load(name: &str) -> NetworkDocument {
    let path = format!("{}/../../networks/{name}", env!("CARGO_MANIFEST_DIR"));
    NetworkDocument::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn paper_document_is_the_paper_example() {
    let model = Model::from_document(&load("paper.json")).unwrap();
    assert_eq!(model.net, zoo::paper_example());
    assert_eq!(model.letter_names, ["a", "b", "c"]);
}

#[test]
fn family_documents_build_zoo_networks() {
    let tri = Model::from_document(&load("triangle.json")).unwrap();
    assert_eq!(tri.net, zoo::build_sandpile(&zoo::triangle()).unwrap());
    let two = Model::from_document(&load("two-cycle.json")).unwrap();
    assert_eq!(two.net, zoo::two_cycle(1, 1).unwrap());
    let rotor = Model::from_document(&load("triangle-rotor.json")).unwrap();
    let reordered = zoo::triangle().with_rotor_orders(vec![vec![0, 1], vec![1, 0], vec![]]);
    assert_eq!(rotor.net, zoo::build_rotor(&reordered).unwrap());
}

#[test]
fn explicit_documents_round_trip() {
    for name in ["paper.json", "triangle.json", "triangle-rotor.json", "two-cycle.json", "sink.json"] {
        let model = Model::from_document(&load(name)).unwrap();
        let doc = model.to_document();
        let text = doc.to_json();
        let again = NetworkDocument::parse(&text).unwrap();
        assert_eq!(again, doc, "{name}");
        assert_eq!(Model::from_document(&again).unwrap(), model, "{name}");
        assert_eq!(again.to_json(), text, "{name}");
    }
}

#[test]
fn battery_round_trips() {
    for (name, net) in zoo::battery() {
        let model = Model::unnamed(net);
        let doc = NetworkDocument::parse(&model.to_document().to_json()).unwrap();
        assert_eq!(Model::from_document(&doc).unwrap(), model, "{name}");
    }
}

#[test]
fn paper_document_is_canonical() {
    let doc = load("paper.json");
    assert_eq!(Model::from_document(&doc).unwrap().to_document(), doc);
}

#[test]
fn sandpilization_document_rebuilds_the_sandpilization() {
    for (name, net) in zoo::battery() {
        let model = Model::unnamed(net);
        let pd = ProductionData::compute(&model.net).unwrap();
        let doc = NetworkDocument::toppling(&model.letter_names, &sandpilize(&pd).unwrap());
        assert_eq!(doc.family.as_ref().unwrap().kind, FamilyKind::Toppling);
        let rebuilt = Model::from_document(&NetworkDocument::parse(&doc.to_json()).unwrap()).unwrap();
        assert_eq!(rebuilt.net, sandpilize(&pd).unwrap(), "{name}");
    }
}

fn parse_err(text: &str) -> DocError {
    Model::from_document(&NetworkDocument::parse(text).unwrap()).unwrap_err()
}

#[test]
fn validation_errors_use_names() {
    assert_eq!(parse_err(r#"{"version": 2, "vertices": []}"#), DocError::Version(2));
    assert_eq!(parse_err(r#"{"version": 1}"#), DocError::Shape);
    let missing = r#"{"version": 1, "vertices": [
        {"name": "p", "states": ["lo", "hi"], "letters": ["a"], "transitions": {"a": {"lo": "hi"}}}]}"#;
    assert_eq!(
        parse_err(missing),
        DocError::MissingTransition { vertex: "p".into(), letter: "a".into(), state: "hi".into() }
    );
    let unknown = r#"{"version": 1, "vertices": [
        {"name": "p", "states": ["lo"], "letters": ["a"], "transitions": {"a": {"lo": "lo"}},
         "outputs": {"a": {"lo": {"zz": 1}}}}]}"#;
    assert_eq!(parse_err(unknown), DocError::UnknownLetter { vertex: "p".into(), letter: "zz".into() });
    let reducible = r#"{"version": 1, "vertices": [
        {"name": "p", "states": ["0", "1"], "letters": ["a"], "transitions": {"a": {"0": "0", "1": "1"}}}]}"#;
    match parse_err(reducible) {
        DocError::Invalid { vertex, message } => {
            assert_eq!(vertex, "p");
            assert!(message.contains("irreducible"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    let not_abelian = r#"{"version": 1, "vertices": [
        {"name": "p", "states": ["0", "1"], "letters": ["a", "b"],
         "transitions": {"a": {"0": "1", "1": "0"}, "b": {"0": "1", "1": "0"}},
         "outputs": {"a": {"0": {"c": 1}, "1": {"c": 2}}, "b": {"1": {"c": 2}}}},
        {"name": "q", "states": ["0"], "letters": ["c"], "transitions": {"c": {"0": "0"}}}]}"#;
    match parse_err(not_abelian) {
        DocError::Invalid { vertex, message } => {
            assert_eq!(vertex, "p");
            assert!(message.contains("\"a\"") && message.contains("\"b\""), "{message}");
        }
        other => panic!("{other:?}"),
    }
    let family = r#"{"version": 1, "family": {"kind": "sandpile", "vertices": ["v", "w", "s"],
        "edges": [["v", "s"], ["w", "w"]], "sink": "s"}}"#;
    match parse_err(family) {
        DocError::Family(m) => assert!(m.contains("w"), "{m}"),
        other => panic!("{other:?}"),
    }
    let toppling = r#"{"version": 1, "family": {"kind": "toppling", "vertices": ["u"], "edges": []}}"#;
    assert_eq!(parse_err(toppling), DocError::MissingThreshold("u".into()));
    let order = r#"{"version": 1, "family": {"kind": "rotor", "vertices": ["v", "s"],
        "edges": [["v", "s"]], "sink": "s", "rotor_order": {"v": ["v"]}}}"#;
    assert_eq!(parse_err(order), DocError::RotorOrder("v".into()));
    assert!(NetworkDocument::parse(r#"{"version": 1, "extra": 0}"#).is_err());
}
