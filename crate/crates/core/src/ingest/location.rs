use crate::states::StateId;

fn lookup(component: &str) -> Option<StateId> {
    let component = component.trim();
    StateId::from_usps(component).or_else(|| StateId::from_name(component))
}

/// Resolves free-text profile locations onto a state.
///
/// Accepts a bare state name or USPS code, or a `City, State` string whose
/// trailing component is one. Anything else is unresolved; bare city names
/// are never geocoded.
pub fn normalize_state(location_text: &str) -> Option<StateId> {
    lookup(location_text).or_else(|| {
        location_text
            .rsplit_once(',')
            .and_then(|(_, tail)| lookup(tail))
    })
}

/// Leading city component of a `City, State` location, title-cased.
///
/// Returns `None` when the text has no city component, or when its trailing
/// component does not resolve to `state`.
pub fn extract_city(location_text: &str, state: StateId) -> Option<String> {
    if lookup(location_text).is_some() {
        return None;
    }
    let (head, tail) = location_text.rsplit_once(',')?;
    if lookup(tail) != Some(state) {
        return None;
    }
    let leading = head.split(',').next().unwrap_or(head);
    let city = title_case(leading);
    (!city.is_empty()).then_some(city)
}

/// Collapses whitespace and upper-cases the first letter of every word
/// (words split on whitespace and hyphens); everything else is lowered.
pub(crate) fn title_case(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        let mut at_start = true;
        for c in word.chars() {
            if at_start {
                out.extend(c.to_uppercase());
            } else {
                out.extend(c.to_lowercase());
            }
            at_start = c == '-';
        }
    }
    out
}
