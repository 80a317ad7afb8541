//! Offline character-trigram language identification.
//!
//! Profiles are smoothed trigram log-probabilities built from bundled seed
//! text. Classification sums per-trigram log-likelihoods and reports the
//! posterior of the winning language (uniform prior over profiles), so the
//! confidence always lies in [0, 1] and is deterministic for fixed profiles.

use std::collections::HashMap;

/// Bundled seed text per language: plain everyday prose, heavy in function
/// words, which dominate character-trigram statistics.
const SEED_EN: &str = "The company publishes a short report every year about the work it has \
done and the plans it has for the future. Most of the people who read these pages want to know \
how the teams build new products, why the results of the research matter, and what will change \
during the next months. When the weather is good, many of us walk to the office through the old \
part of the town, past the market and the station. There is always something new to see on the \
way, and the first meeting of the day often starts with a story about it. We believe that clear \
writing helps everyone understand the goals, so each group describes what it has learned in \
simple words that anyone can follow without effort.";

const SEED_FR: &str = "L'entreprise publie chaque année un court rapport sur le travail qu'elle \
a accompli et sur les projets qu'elle prépare pour l'avenir. La plupart des personnes qui lisent \
ces pages veulent savoir comment les équipes construisent de nouveaux produits, pourquoi les \
résultats de la recherche sont importants, et ce qui va changer au cours des prochains mois. \
Quand le temps est beau, beaucoup d'entre nous marchent jusqu'au bureau en traversant la vieille \
partie de la ville, devant le marché et la gare. Il y a toujours quelque chose de nouveau à voir \
en chemin, et la première réunion de la journée commence souvent par une histoire à ce sujet. \
Nous pensons qu'une écriture claire aide tout le monde à comprendre les objectifs, donc chaque \
groupe décrit ce qu'il a appris avec des mots simples que chacun peut suivre sans effort.";

const SEED_DE: &str = "Das Unternehmen veröffentlicht jedes Jahr einen kurzen Bericht über die \
geleistete Arbeit und über die Pläne für die Zukunft. Die meisten Menschen, die diese Seiten \
lesen, möchten wissen, wie die Teams neue Produkte entwickeln, warum die Ergebnisse der \
Forschung wichtig sind und was sich in den nächsten Monaten ändern wird. Wenn das Wetter gut \
ist, gehen viele von uns zu Fuß durch den alten Teil der Stadt zum Büro, vorbei am Markt und am \
Bahnhof. Unterwegs gibt es immer etwas Neues zu sehen, und die erste Besprechung des Tages \
beginnt oft mit einer Geschichte darüber. Wir glauben, dass klares Schreiben allen hilft, die \
Ziele zu verstehen, deshalb beschreibt jede Gruppe mit einfachen Worten, was sie gelernt hat.";

const SEED_ES: &str = "La empresa publica cada año un breve informe sobre el trabajo que ha \
realizado y sobre los planes que prepara para el futuro. La mayoría de las personas que leen \
estas páginas quieren saber cómo los equipos construyen nuevos productos, por qué los \
resultados de la investigación son importantes y qué va a cambiar durante los próximos meses. \
Cuando el tiempo es bueno, muchos de nosotros caminamos hasta la oficina por la parte antigua \
de la ciudad, pasando por el mercado y la estación. Siempre hay algo nuevo que ver en el \
camino, y la primera reunión del día empieza muchas veces con una historia sobre ello. Creemos \
que una escritura clara ayuda a todos a entender los objetivos, por eso cada grupo describe lo \
que ha aprendido con palabras sencillas que cualquiera puede seguir sin esfuerzo.";

const SEED_IT: &str = "L'azienda pubblica ogni anno un breve rapporto sul lavoro che ha svolto \
e sui piani che prepara per il futuro. La maggior parte delle persone che leggono queste pagine \
vuole sapere come le squadre costruiscono nuovi prodotti, perché i risultati della ricerca sono \
importanti e che cosa cambierà nei prossimi mesi. Quando il tempo è bello, molti di noi \
camminano fino all'ufficio attraverso la parte vecchia della città, davanti al mercato e alla \
stazione. C'è sempre qualcosa di nuovo da vedere lungo la strada, e la prima riunione della \
giornata comincia spesso con una storia su questo. Crediamo che una scrittura chiara aiuti \
tutti a capire gli obiettivi, quindi ogni gruppo descrive con parole semplici quello che ha \
imparato.";

pub const BUNDLED_SEEDS: &[(&str, &str)] = &[
    ("en", SEED_EN),
    ("fr", SEED_FR),
    ("de", SEED_DE),
    ("es", SEED_ES),
    ("it", SEED_IT),
];

#[derive(Debug, Clone)]
struct Profile {
    code: String,
    logp: HashMap<String, f64>,
    floor: f64,
}

impl Profile {
    fn train(code: &str, text: &str) -> Profile {
        let mut counts: HashMap<String, usize> = HashMap::new();
        let mut total = 0usize;
        for tri in trigrams(text) {
            *counts.entry(tri).or_insert(0) += 1;
            total += 1;
        }
        // Add-one smoothing over the observed vocabulary plus one slot for
        // everything unseen.
        let denom = (total + counts.len() + 1) as f64;
        let logp = counts
            .into_iter()
            .map(|(tri, c)| (tri, ((c + 1) as f64 / denom).ln()))
            .collect();
        Profile { code: code.to_string(), logp, floor: (1.0 / denom).ln() }
    }

    fn score(&self, trigram_list: &[String]) -> f64 {
        trigram_list
            .iter()
            .map(|tri| self.logp.get(tri).copied().unwrap_or(self.floor))
            .sum()
    }
}

/// Lowercases, folds non-alphabetic characters to spaces, and yields padded
/// word trigrams (` wo`, `wor`, `ord`, `rd `).
fn trigrams(text: &str) -> Vec<String> {
    let folded: String = text
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphabetic() { c } else { ' ' })
        .collect();
    let mut out = Vec::new();
    for word in folded.split_whitespace() {
        let padded: Vec<char> = std::iter::once(' ')
            .chain(word.chars())
            .chain(std::iter::once(' '))
            .collect();
        for window in padded.windows(3) {
            out.push(window.iter().collect());
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct LanguageIdentifier {
    profiles: Vec<Profile>,
}

impl LanguageIdentifier {
    /// The five bundled profiles: en, fr, de, es, it.
    pub fn bundled() -> LanguageIdentifier {
        LanguageIdentifier::from_seed_texts(BUNDLED_SEEDS.iter().copied())
    }

    pub fn from_seed_texts<'a, I>(seeds: I) -> LanguageIdentifier
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        LanguageIdentifier {
            profiles: seeds
                .into_iter()
                .map(|(code, text)| Profile::train(code, text))
                .collect(),
        }
    }

    pub fn languages(&self) -> Vec<&str> {
        self.profiles.iter().map(|p| p.code.as_str()).collect()
    }

    /// Top language and its posterior. `None` when the text yields no
    /// trigrams at all.
    pub fn classify(&self, text: &str) -> Option<(&str, f64)> {
        let grams = trigrams(text);
        if grams.is_empty() || self.profiles.is_empty() {
            return None;
        }
        let scores: Vec<f64> = self.profiles.iter().map(|p| p.score(&grams)).collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = scores.iter().map(|s| (s - max).exp()).sum();
        let (best_idx, best_score) = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let posterior = (best_score - max).exp() / denom;
        Some((self.profiles[best_idx].code.as_str(), posterior))
    }

    /// The two-step contract: short text falls back to the declaration with
    /// zero confidence; otherwise the classifier either confirms the
    /// declaration or overrides it, reporting its posterior either way.
    pub fn detect(&self, text: &str, declared: Option<&str>) -> (String, f64) {
        let collapsed: String = text.split_whitespace().collect::<Vec<_>>().join(" ");
        if collapsed.chars().count() < 20 {
            return (declared.unwrap_or("und").to_string(), 0.0);
        }
        match self.classify(&collapsed) {
            Some((code, confidence)) => (code.to_string(), confidence),
            None => (declared.unwrap_or("und").to_string(), 0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pangram_is_confident_english() {
        let id = LanguageIdentifier::bundled();
        let (lang, confidence) =
            id.detect("The quick brown fox jumps over the lazy dog", Some("en"));
        assert_eq!(lang, "en");
        assert!(confidence >= 0.9, "confidence {confidence}");
    }

    #[test]
    fn short_text_returns_declared_with_zero() {
        let id = LanguageIdentifier::bundled();
        assert_eq!(id.detect("", Some("fr")), ("fr".to_string(), 0.0));
        assert_eq!(id.detect("hi there", None), ("und".to_string(), 0.0));
    }

    #[test]
    fn classifier_overrides_wrong_declaration() {
        let id = LanguageIdentifier::bundled();
        let text = "Les résultats de la recherche sont importants pour toutes les équipes \
qui préparent de nouveaux produits pour les prochains mois.";
        let (lang, confidence) = id.detect(text, Some("en"));
        assert_eq!(lang, "fr");
        assert!(confidence > 0.5);
    }

    #[test]
    fn confidence_always_in_unit_interval() {
        let id = LanguageIdentifier::bundled();
        for text in [
            "Das Wetter ist heute wirklich schön und wir gehen zu Fuß zur Arbeit.",
            "xyzzy qwrtp zzzzz mmmmm aaaaa bbbbb ccccc ddddd",
            "1234567890 1234567890 1234567890",
        ] {
            let (_, c) = id.detect(text, None);
            assert!((0.0..=1.0).contains(&c), "{text}: {c}");
        }
    }

    #[test]
    fn each_seed_classifies_as_itself() {
        let id = LanguageIdentifier::bundled();
        for (code, seed) in BUNDLED_SEEDS {
            let (lang, confidence) = id.detect(seed, None);
            assert_eq!(&lang, code);
            assert!(confidence > 0.99, "{code}: {confidence}");
        }
    }

    #[test]
    fn non_alphabetic_text_is_undecidable() {
        let id = LanguageIdentifier::bundled();
        let (lang, confidence) = id.detect("123 456 789 000 111 222 333", Some("de"));
        assert_eq!(lang, "de");
        assert_eq!(confidence, 0.0);
    }

    #[test]
    fn detection_is_deterministic() {
        let id = LanguageIdentifier::bundled();
        let text = "Cuando el tiempo es bueno caminamos hasta la oficina por la ciudad.";
        assert_eq!(id.detect(text, None), id.detect(text, None));
    }
}
