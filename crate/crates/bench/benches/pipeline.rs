use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use geoloc_bench::fixture;
use geoloc_core::counts::{prefilter, CountsTable};
use geoloc_core::evaluate::FeatureContext;
use geoloc_core::model::predict_corpus_sequential;
use geoloc_core::weighting::rank;
use geoloc_core::{build_lexicons, lexicon_feature_set, train_nb, FeatureMethod, GridCell, LexiconParams, ClassifierSpec};

fn counting(c: &mut Criterion) {
    let data = fixture(20, 0);
    c.bench_function("counts_and_prefilter", |b| {
        b.iter(|| {
            let counts = CountsTable::build(black_box(&data.train)).unwrap();
            prefilter(&counts, 3).unwrap().len()
        })
    });
}

fn ranking(c: &mut Criterion) {
    let data = fixture(20, 0);
    let counts = CountsTable::build(&data.train).unwrap();
    let vocab = prefilter(&counts, 3).unwrap();
    let mut group = c.benchmark_group("rank");
    for method in [FeatureMethod::Igr, FeatureMethod::Wlh] {
        group.bench_with_input(BenchmarkId::from_parameter(method), &method, |b, &m| {
            b.iter(|| rank(&vocab, &counts, m).unwrap().len())
        });
    }
    group.finish();
    let params = LexiconParams::new(3, 10.0, 2).unwrap();
    c.bench_function("build_lexicons", |b| {
        b.iter(|| build_lexicons(&vocab, &counts, params).unwrap().total_words())
    });
}

fn train_and_predict(c: &mut Criterion) {
    let data = fixture(20, 0);
    let ctx = FeatureContext::new(&data.train, 3).unwrap();
    let nb = ClassifierSpec::Nb { alpha: 1.0 };
    let cells = [
        GridCell::new(FeatureMethod::All, 1.0, nb),
        GridCell::new(FeatureMethod::Wlh, 0.1, nb),
        GridCell::lexicon(LexiconParams::new(3, 10.0, 2).unwrap(), nb),
    ];
    let mut fit = c.benchmark_group("train_nb");
    for cell in &cells {
        let features = ctx.features(cell).unwrap();
        fit.bench_function(cell.label(), |b| b.iter(|| train_nb(&data.train, &features, 1.0).unwrap()));
    }
    fit.finish();
    let mut pred = c.benchmark_group("predict");
    for cell in &cells {
        let features = ctx.features(cell).unwrap();
        let model = cell.classifier.train(&data.train, &features).unwrap();
        pred.bench_function(cell.label(), |b| b.iter(|| predict_corpus_sequential(&model, &data.test).len()));
    }
    pred.finish();
    let lex = build_lexicons(ctx.vocab(), ctx.counts(), LexiconParams::new(3, 10.0, 2).unwrap()).unwrap();
    c.bench_function("lexicon_feature_set", |b| b.iter(|| lexicon_feature_set(&lex).unwrap().len()));
}

criterion_group!(benches, counting, ranking, train_and_predict);
criterion_main!(benches);
