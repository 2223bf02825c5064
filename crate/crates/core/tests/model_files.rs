use geoloc_core::corpus::{split, synth_corpus, SplitSpec, SynthSpec};
use geoloc_core::counts::{prefilter, CountsTable};
use geoloc_core::model::{predict_corpus, FeatureProvenance, ModelFile};
use geoloc_core::weighting::{rank_and_select, FeatureMethod};
use geoloc_core::{ClassifierSpec, GeolocError, LinearHyper, Media};

#[test]
fn saved_models_predict_identically() {
    let spec = SynthSpec {
        users_per_state: 6,
        ..SynthSpec::default()
    };
    let parts = split(&synth_corpus(&spec, 2).unwrap(), &SplitSpec::new(2, 0.5, 0.25, 0.25)).unwrap();
    let counts = CountsTable::build(&parts.train).unwrap();
    let vocab = prefilter(&counts, 2).unwrap();
    let features = rank_and_select(&vocab, &counts, FeatureMethod::Wlh, 0.2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for spec in [ClassifierSpec::Nb { alpha: 0.5 }, ClassifierSpec::Linear(LinearHyper::default())] {
        let model = spec.train(&parts.train, &features).unwrap();
        let file = ModelFile::new(
            model,
            FeatureProvenance {
                method: FeatureMethod::Wlh,
                fraction: 0.2,
                source_media: Media::Blog,
                min_users: 2,
                lexicon: None,
            },
            Some("abc123".into()),
        );
        let path = dir.path().join(format!("{}.json", file.model.kind()));
        file.save(&path).unwrap();
        let back = ModelFile::load(&path).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.provenance.source_media, Media::Blog);
        assert_eq!(back.config_hash.as_deref(), Some("abc123"));
        let a = predict_corpus(&file.model, &parts.test);
        let b = predict_corpus(&back.model, &parts.test);
        assert_eq!(a, b);
    }
}

#[test]
fn unknown_versions_are_rejected() {
    let text = r#"{"format":"geoloc-model","version":99,"config_hash":null}"#;
    assert!(matches!(ModelFile::from_json(text), Err(GeolocError::ModelFormat(_))));
    assert!(ModelFile::from_json("not json").is_err());
}
