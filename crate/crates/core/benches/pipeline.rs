use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use geolex_core::analytics::category_numerators;
use geolex_core::index::{CorpusIndex, IndexBuilder};
use geolex_core::ingest::{strip_html, Profile, Tokenizer};
use geolex_core::lexicon::parse_dic;
use geolex_core::StateId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LEXICON: &str = "%\n1\tmoney\n2\twork\n3\tleisure\n%\ndollar*\t1\npay*\t1\ncash\t1\nwork*\t2\njob*\t2\nbusy\t2\nbeach*\t3\nlake\t3\nw0*\t3\n";

fn synthetic_text(bytes: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab: Vec<String> = (0..5000).map(|i| format!("w{i}")).collect();
    let mut text = String::with_capacity(bytes + 16);
    while text.len() < bytes {
        // rough Zipf: small ids dominate
        let r: f64 = rng.gen();
        let i = ((vocab.len() as f64).powf(r) as usize).min(vocab.len() - 1);
        text.push_str(&vocab[i]);
        text.push(if rng.gen_ratio(1, 12) { '.' } else { ' ' });
    }
    text
}

fn fixture(posts: &[String]) -> CorpusIndex {
    let mut b = IndexBuilder::new();
    for (i, state) in StateId::all().enumerate() {
        b.add_profile(&Profile {
            user_id: format!("u{i}"),
            state,
            city: None,
            gender: None,
            industry: None,
            blog_ids: vec![format!("b{i}")],
        })
        .unwrap();
    }
    for (i, text) in posts.iter().enumerate() {
        b.add_post_text(&format!("b{}", i % 50), &i.to_string(), text);
    }
    b.finish().0
}

fn tokenize(c: &mut Criterion) {
    let text = synthetic_text(1 << 20, 1);
    let mut group = c.benchmark_group("tokenize");
    group.throughput(Throughput::Bytes(text.len() as u64));
    group.bench_function("1MiB", |b| {
        let mut tk = Tokenizer::new();
        b.iter(|| {
            let mut n = 0usize;
            tk.for_each_token(&text, |_, _| n += 1);
            n
        })
    });
    group.finish();
}

fn strip(c: &mut Criterion) {
    let body = synthetic_text(1 << 18, 2);
    let html: String = body
        .split('.')
        .map(|s| format!("<p class=\"x\">{s} &amp; <b>more</b></p>"))
        .collect();
    let mut group = c.benchmark_group("strip_html");
    group.throughput(Throughput::Bytes(html.len() as u64));
    group.bench_function("markup", |b| b.iter(|| strip_html(&html)));
    group.finish();
}

fn count(c: &mut Criterion) {
    let posts: Vec<String> = (0..64).map(|i| synthetic_text(1 << 14, 100 + i)).collect();
    let bytes: usize = posts.iter().map(String::len).sum();
    let mut group = c.benchmark_group("index");
    group.throughput(Throughput::Bytes(bytes as u64));
    group.bench_function("build", |b| {
        b.iter_batched(|| posts.clone(), |p| fixture(&p), BatchSize::LargeInput)
    });
    group.finish();
}

fn categories(c: &mut Criterion) {
    let posts: Vec<String> = (0..64).map(|i| synthetic_text(1 << 14, 200 + i)).collect();
    let index = fixture(&posts);
    let matcher = parse_dic("bench", LEXICON).unwrap().compile();
    let mut group = c.benchmark_group("categories");
    group.throughput(Throughput::Elements(index.vocabulary_size() as u64));
    group.bench_function("numerators", |b| {
        b.iter(|| category_numerators(&index, &matcher))
    });
    group.finish();
}

criterion_group!(benches, tokenize, strip, count, categories);
criterion_main!(benches);
