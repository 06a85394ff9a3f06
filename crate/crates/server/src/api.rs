//! `/api/v1` routes.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use geolex_core::analytics::{
    city_density, density_map, facet_map, word_map, AnalyticsError, CategoryCache, CityDot, Facet,
    ProportionVector,
};
use geolex_core::choropleth::{bin_quantile, ChoroplethError, ChoroplethSpec, MapVector};
use geolex_core::index::CorpusIndex;
use geolex_core::stats::{
    compare_maps, extremes_of_maps, parse_state_csv, spearman, CategoryRef as PairMember,
    CorrelationResult, ExtremesReport, StatsError,
};
use geolex_core::{choropleth, StateId};
use serde::Serialize;
use tower_http::services::ServeDir;

use crate::catalog::{Catalog, CategoryRef, LoadedLexicon, LookupError};

pub const DEFAULT_DENSITY_THRESHOLD: u64 = 100;
pub const DEFAULT_EXTREMES_K: usize = 3;

/// Everything a request can read. Immutable once serving starts.
pub struct AppState {
    pub index: Option<Arc<CorpusIndex>>,
    pub catalog: Catalog,
    pub bins: usize,
    /// HTTP date of the index file, sent as `Last-Modified`.
    pub last_modified: Option<String>,
    cache: CategoryCache,
}

impl AppState {
    pub fn new(index: Option<CorpusIndex>, catalog: Catalog) -> AppState {
        AppState {
            index: index.map(Arc::new),
            catalog,
            bins: choropleth::DEFAULT_BINS,
            last_modified: None,
            cache: CategoryCache::new(),
        }
    }
}

type Shared = Arc<AppState>;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: ErrorDetail<'a>,
}

#[derive(Serialize)]
struct ErrorDetail<'a> {
    code: &'a str,
    message: &'a str,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::to_vec(&ErrorBody {
            error: ErrorDetail {
                code: self.code,
                message: &self.message,
            },
        })
        .expect("error body serializes");
        (
            self.status,
            [(header::CONTENT_TYPE, "application/json")],
            body,
        )
            .into_response()
    }
}

impl From<LookupError> for ApiError {
    fn from(e: LookupError) -> ApiError {
        let code = match e {
            LookupError::UnknownLexicon(_) => "unknown_lexicon",
            LookupError::UnknownCategory { .. } => "unknown_category",
        };
        ApiError::new(StatusCode::NOT_FOUND, code, e.to_string())
    }
}

impl From<AnalyticsError> for ApiError {
    fn from(e: AnalyticsError) -> ApiError {
        let (status, code) = match e {
            AnalyticsError::UnknownCategory { .. } => (StatusCode::NOT_FOUND, "unknown_category"),
            AnalyticsError::UnknownIndustry(_) | AnalyticsError::InvalidFacet(_) => {
                (StatusCode::NOT_FOUND, "unknown_facet")
            }
            AnalyticsError::InvalidThreshold => (StatusCode::BAD_REQUEST, "bad_request"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<ChoroplethError> for ApiError {
    fn from(e: ChoroplethError) -> ApiError {
        match e {
            ChoroplethError::NoData => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "no_data", e.to_string())
            }
            ChoroplethError::InvalidBinCount => ApiError::bad_request(e.to_string()),
        }
    }
}

impl From<StatsError> for ApiError {
    fn from(e: StatsError) -> ApiError {
        let code = match e {
            StatsError::UndefinedCorrelation(_) => "undefined_correlation",
            StatsError::InsufficientData(_) => "insufficient_data",
            StatsError::Analytics(inner) => return inner.into(),
            _ => "invalid_vector",
        };
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, e.to_string())
    }
}

type ApiResult = Result<Response, ApiError>;

fn etag(body: &[u8]) -> String {
    let mut h = DefaultHasher::new();
    body.hash(&mut h);
    format!("\"{:016x}\"", h.finish())
}

/// Serializes `value` with caching headers; answers 304 when the client
/// already holds the same body.
fn json<T: Serialize>(state: &AppState, request: &HeaderMap, value: &T) -> ApiResult {
    let body = serde_json::to_vec(value)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    let tag = etag(&body);
    let mut headers = HeaderMap::new();
    headers.insert(
        header::ETAG,
        HeaderValue::from_str(&tag).expect("ascii etag"),
    );
    headers.insert(
        header::CACHE_CONTROL,
        HeaderValue::from_static("public, max-age=3600"),
    );
    if let Some(date) = state.last_modified.as_deref() {
        if let Ok(v) = HeaderValue::from_str(date) {
            headers.insert(header::LAST_MODIFIED, v);
        }
    }
    let fresh = request
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.split(',').any(|t| t.trim() == tag || t.trim() == "*"));
    if fresh {
        return Ok((StatusCode::NOT_MODIFIED, headers).into_response());
    }
    headers.insert(
        header::CONTENT_TYPE,
        HeaderValue::from_static("application/json"),
    );
    Ok((StatusCode::OK, headers, body).into_response())
}

fn index(state: &AppState) -> Result<&CorpusIndex, ApiError> {
    state.index.as_deref().ok_or_else(|| {
        ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "index_not_loaded",
            "no corpus index is loaded",
        )
    })
}

type Params = Query<HashMap<String, String>>;

fn param<'a>(params: &'a Params, name: &str) -> Option<&'a str> {
    params.get(name).map(String::as_str)
}

fn required<'a>(params: &'a Params, name: &str) -> Result<&'a str, ApiError> {
    param(params, name)
        .filter(|v| !v.is_empty())
        .ok_or_else(|| ApiError::bad_request(format!("missing query parameter `{name}`")))
}

fn parsed<T: std::str::FromStr>(params: &Params, name: &str, default: T) -> Result<T, ApiError> {
    match param(params, name) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| ApiError::bad_request(format!("invalid `{name}`: `{v}`"))),
    }
}

fn bins(state: &AppState, params: &Params) -> Result<usize, ApiError> {
    parsed(params, "bins", state.bins)
}

fn spec(vector: impl Into<MapVector>, bins: usize) -> Result<ChoroplethSpec, ApiError> {
    Ok(bin_quantile(vector, bins)?)
}

#[derive(Serialize)]
struct StateInfo {
    usps: &'static str,
    name: &'static str,
}

#[derive(Serialize)]
struct CategoryInfo<'a> {
    id: u32,
    name: &'a str,
    patterns: usize,
}

#[derive(Serialize)]
struct LexiconInfo<'a> {
    name: &'a str,
    categories: Vec<CategoryInfo<'a>>,
}

#[derive(Serialize)]
struct CorpusInfo<'a> {
    doc_count: u64,
    user_count: usize,
    token_count: u64,
    vocabulary_size: usize,
    industries: Vec<&'a str>,
}

#[derive(Serialize)]
struct Meta<'a> {
    index_loaded: bool,
    corpus: Option<CorpusInfo<'a>>,
    states: Vec<StateInfo>,
    lexicons: Vec<LexiconInfo<'a>>,
    default_bins: usize,
}

async fn meta(State(state): State<Shared>, headers: HeaderMap) -> ApiResult {
    let corpus = state.index.as_deref().map(|index| CorpusInfo {
        doc_count: index.doc_count(),
        user_count: index.user_count(),
        token_count: index.token_totals().total(),
        vocabulary_size: index.vocabulary_size(),
        industries: index.industries().collect(),
    });
    let lexicons = state
        .catalog
        .iter()
        .map(|l| LexiconInfo {
            name: l.lexicon.name(),
            categories: l
                .lexicon
                .categories()
                .iter()
                .map(|c| CategoryInfo {
                    id: c.id,
                    name: &c.name,
                    patterns: c.patterns.len(),
                })
                .collect(),
        })
        .collect();
    let body = Meta {
        index_loaded: corpus.is_some(),
        corpus,
        states: StateId::all()
            .map(|s| StateInfo {
                usps: s.usps(),
                name: s.name(),
            })
            .collect(),
        lexicons,
        default_bins: state.bins,
    };
    json(&state, &headers, &body)
}

async fn map_word(
    State(state): State<Shared>,
    Path(word): Path<String>,
    params: Params,
    headers: HeaderMap,
) -> ApiResult {
    let index = index(&state)?;
    let body = spec(word_map(index, &word), bins(&state, &params)?)?;
    json(&state, &headers, &body)
}

fn category_vector(
    state: &AppState,
    index: &CorpusIndex,
    loaded: &LoadedLexicon,
    id: u32,
) -> Result<ProportionVector, ApiError> {
    Ok(state.cache.category_map(index, &loaded.matcher, id)?)
}

async fn map_category(
    State(state): State<Shared>,
    Path((lexicon, category)): Path<(String, String)>,
    params: Params,
    headers: HeaderMap,
) -> ApiResult {
    let index = index(&state)?;
    let (loaded, id, _) = state.catalog.resolve(&CategoryRef { lexicon, category })?;
    let vector = category_vector(&state, index, loaded, id)?;
    let body = spec(vector, bins(&state, &params)?)?;
    json(&state, &headers, &body)
}

async fn map_facet(State(state): State<Shared>, params: Params, headers: HeaderMap) -> ApiResult {
    let index = index(&state)?;
    let facet = Facet::new(required(&params, "kind")?, required(&params, "value")?)?;
    let body = spec(facet_map(index, &facet)?, bins(&state, &params)?)?;
    json(&state, &headers, &body)
}

#[derive(Serialize)]
struct DensityBody {
    map: ChoroplethSpec,
    threshold: u64,
    cities: Vec<CityDot>,
}

async fn map_density(State(state): State<Shared>, params: Params, headers: HeaderMap) -> ApiResult {
    let index = index(&state)?;
    let threshold = parsed(&params, "threshold", DEFAULT_DENSITY_THRESHOLD)?;
    let cities = city_density(index, threshold)?;
    let body = DensityBody {
        map: spec(density_map(index), bins(&state, &params)?)?,
        threshold,
        cities,
    };
    json(&state, &headers, &body)
}

#[derive(Serialize)]
struct CompareSide {
    lexicon: String,
    category: PairMember,
    map: ChoroplethSpec,
}

#[derive(Serialize)]
struct CompareBody {
    a: CompareSide,
    b: CompareSide,
    correlation: CorrelationResult,
}

async fn compare(State(state): State<Shared>, params: Params, headers: HeaderMap) -> ApiResult {
    let index = index(&state)?;
    let bins = bins(&state, &params)?;
    let mut sides = Vec::with_capacity(2);
    for name in ["a", "b"] {
        let r: CategoryRef = required(&params, name)?
            .parse()
            .map_err(ApiError::bad_request)?;
        let (loaded, id, category) = state.catalog.resolve(&r)?;
        let vector = category_vector(&state, index, loaded, id)?;
        sides.push((r.lexicon, PairMember { id, name: category }, vector));
    }
    let (lb, cb, vb) = sides.pop().expect("two sides");
    let (la, ca, va) = sides.pop().expect("two sides");
    let comparison = compare_maps(va, vb)?;
    let body = CompareBody {
        a: CompareSide {
            lexicon: la,
            category: ca,
            map: spec(comparison.a, bins)?,
        },
        b: CompareSide {
            lexicon: lb,
            category: cb,
            map: spec(comparison.b, bins)?,
        },
        correlation: comparison.correlation,
    };
    json(&state, &headers, &body)
}

#[derive(Serialize)]
struct ExtremesBody<'a> {
    lexicon: &'a str,
    k: usize,
    #[serde(flatten)]
    report: ExtremesReport,
}

async fn extremes(State(state): State<Shared>, params: Params, headers: HeaderMap) -> ApiResult {
    let index = index(&state)?;
    let k: usize = parsed(&params, "k", DEFAULT_EXTREMES_K)?;
    if k == 0 {
        return Err(ApiError::bad_request("`k` must be at least 1"));
    }
    let loaded = match param(&params, "lexicon") {
        Some(name) => state
            .catalog
            .get(name)
            .ok_or_else(|| LookupError::UnknownLexicon(name.to_string()))?,
        None if state.catalog.len() == 1 => state.catalog.iter().next().expect("one lexicon"),
        None => {
            return Err(ApiError::bad_request(
                "query parameter `lexicon` is required when several lexicons are loaded",
            ))
        }
    };
    let numerators = state.cache.numerators(index, &loaded.matcher);
    let totals = *index.token_totals();
    let maps: Vec<_> = loaded
        .matcher
        .categories()
        .iter()
        .zip(numerators.iter())
        .map(|((id, name), num)| {
            (
                PairMember {
                    id: *id,
                    name: name.clone(),
                },
                ProportionVector::new(*num, totals).values,
            )
        })
        .collect();
    let report = extremes_of_maps(&maps, k)?;
    let body = ExtremesBody {
        lexicon: loaded.lexicon.name(),
        k,
        report,
    };
    json(&state, &headers, &body)
}

#[derive(Serialize)]
struct ExternalBody {
    against: &'static str,
    correlation: CorrelationResult,
}

async fn correlate_external(
    State(state): State<Shared>,
    headers: HeaderMap,
    body: String,
) -> ApiResult {
    let index = index(&state)?;
    let external = parse_state_csv(&body).map_err(|e| {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "malformed_vector",
            e.to_string(),
        )
    })?;
    let density = density_map(index).map(|&n| Some(n as f64));
    let correlation = spearman(external.as_slice(), density.as_slice())?;
    json(
        &state,
        &headers,
        &ExternalBody {
            against: "user_density",
            correlation,
        },
    )
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

async fn topojson() -> impl IntoResponse {
    (
        [
            (header::CONTENT_TYPE, "application/json"),
            (header::CACHE_CONTROL, "public, max-age=86400"),
        ],
        choropleth::US_STATES_TOPOJSON,
    )
}

/// The versioned JSON API, to be nested under `/api/v1`.
pub fn api_router(state: Shared) -> Router {
    Router::new()
        .route("/meta", get(meta))
        .route("/map/word/:word", get(map_word))
        .route("/map/category/:lexicon/:category", get(map_category))
        .route("/map/facet", get(map_facet))
        .route("/map/density", get(map_density))
        .route("/compare", get(compare))
        .route("/correlations/extremes", get(extremes))
        .route("/correlate/external", post(correlate_external))
        .fallback(not_found)
        .with_state(state)
}

/// API, state geometry and, when given, the static UI.
pub fn app(state: AppState, ui_dir: Option<PathBuf>) -> Router {
    let router = Router::new()
        .nest("/api/v1", api_router(Arc::new(state)))
        .route("/assets/us-states.topo.json", get(topojson));
    match ui_dir {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router,
    }
}
