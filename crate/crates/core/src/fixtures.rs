//! Seeded test corpora with recorded ground truth.
//!
//! [`PlantedGenerator`] writes crawl records made of unique Spanish
//! template sentences, planted quality faults and planted duplicates. Each
//! fault is built to trip exactly one quality or language check under the
//! default configuration, and [`GroundTruth::expected`] replays the
//! cleaning rules on the labels alone to predict every counter.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, RawRecord, Reason, Result};

const OPENERS: &[&str] = &[
    "",
    "Ayer por la tarde",
    "Esta mañana",
    "El pasado domingo",
    "Según los vecinos",
    "Como cada año",
    "Sin que nadie lo esperara",
    "A finales de junio",
    "Hace unos meses",
    "Por primera vez",
    "Durante la reunión",
    "Tras varios intentos",
];

const SUBJECTS: &[&str] = &[
    "el dueño del bar",
    "la profesora de historia",
    "mi vecino del tercero",
    "el médico del pueblo",
    "la directora del museo",
    "un grupo de estudiantes",
    "nuestra abuela",
    "el equipo local",
    "la orquesta municipal",
    "el panadero de la esquina",
    "la periodista",
    "un turista despistado",
    "el jardinero",
    "la bibliotecaria",
    "el cocinero del restaurante",
    "una pareja de jubilados",
    "el conductor del autobús",
    "la asociación de vecinos",
    "el carpintero",
    "la médica de guardia",
    "el nuevo entrenador",
    "una familia numerosa",
    "el dueño de la tienda",
    "la ingeniera jefa",
    "el cartero",
    "la presidenta de la comunidad",
    "el pescador más viejo",
    "una joven pintora",
    "el guía del parque",
    "la farmacéutica",
    "el fontanero",
    "la maestra de música",
    "un equipo de voluntarios",
    "el portero del edificio",
    "la científica",
    "el librero",
    "una niña curiosa",
    "el veterinario",
    "la pastelera",
    "el ayuntamiento",
];

const VERBS: &[&str] = &[
    "compró",
    "preparó",
    "encontró",
    "organizó",
    "visitó",
    "describió",
    "recomendó",
    "revisó",
    "pintó",
    "defendió",
    "presentó",
    "explicó",
    "reparó",
    "vendió",
    "mostró",
    "dibujó",
    "escribió",
    "limpió",
    "devolvió",
    "guardó",
    "perdió",
    "recogió",
    "decoró",
    "estudió",
    "cuidó",
    "regaló",
    "construyó",
    "midió",
    "fotografió",
    "comentó",
    "alquiló",
    "ordenó",
    "terminó",
    "llevó",
    "buscó",
    "eligió",
];

const OBJECTS: &[&str] = &[
    "una casa antigua",
    "el informe del año pasado",
    "la receta de la familia",
    "un mapa del barrio",
    "los planos del puente",
    "una mesa de madera",
    "el huerto comunitario",
    "las cartas del abuelo",
    "un cuadro muy colorido",
    "la bicicleta roja",
    "el programa de las fiestas",
    "unas sillas nuevas",
    "la fuente de la plaza",
    "un libro de cuentos",
    "el tejado de la iglesia",
    "la colección de sellos",
    "unas fotografías antiguas",
    "el menú del día",
    "la escalera del sótano",
    "un jardín lleno de flores",
    "el presupuesto de la obra",
    "las llaves del almacén",
    "una maleta pequeña",
    "el mural del colegio",
    "la ruta de senderismo",
    "unos zapatos de cuero",
    "el calendario de visitas",
    "la lista de la compra",
    "un barco de pesca",
    "el escaparate de la tienda",
    "las cuentas del mes",
    "una caja de herramientas",
    "el traje de la boda",
    "la pista de baile",
    "un cesto de manzanas",
    "el piano del salón",
];

const COMPLEMENTS: &[&str] = &[
    "durante las vacaciones de verano",
    "antes de que llegara la lluvia",
    "con la ayuda de sus amigos",
    "para la fiesta del sábado",
    "en la plaza mayor",
    "sin pedir permiso a nadie",
    "después de comer",
    "con mucha paciencia",
    "para sorpresa de todos",
    "cerca de la estación",
    "a primera hora de la mañana",
    "mientras los niños jugaban",
    "en el centro cultural",
    "junto a la orilla del río",
    "a pesar del frío",
    "con el dinero que había ahorrado",
    "en menos de una hora",
    "para celebrar el cumpleaños",
    "al otro lado de la calle",
    "con una sonrisa enorme",
    "en el mercado de los jueves",
    "desde su casa de campo",
    "entre risas y aplausos",
    "para los vecinos del barrio",
    "bajo la mirada de todos",
    "con sus propias manos",
    "antes de la cena",
    "en la biblioteca del pueblo",
    "como le habían pedido",
    "durante la tormenta de ayer",
    "en el patio del colegio",
    "sin decir una sola palabra",
];

/// One unique Spanish sentence per call, capitalized and ending in a
/// period.
fn spanish_sentence(rng: &mut ChaCha8Rng) -> String {
    let opener = *OPENERS.choose(rng).expect("non-empty");
    let body = format!(
        "{} {} {} {}",
        SUBJECTS.choose(rng).expect("non-empty"),
        VERBS.choose(rng).expect("non-empty"),
        OBJECTS.choose(rng).expect("non-empty"),
        COMPLEMENTS.choose(rng).expect("non-empty"),
    );
    let s = if opener.is_empty() {
        body
    } else {
        format!("{opener} {body}")
    };
    capitalize(&s) + "."
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Quality faults the generator can plant, each tripping one check.
pub const FAULT_KINDS: [Reason; 9] = [
    Reason::TooShort,
    Reason::TooLong,
    Reason::LowAlphaRatio,
    Reason::HighDigitRatio,
    Reason::HighUpperRatio,
    Reason::HighPunctRatio,
    Reason::RepeatedChars,
    Reason::BoilerplateMatch,
    Reason::WrongLanguage,
];

const SHORT_WORDS: &[&str] = &["sol", "mar", "pan", "luz", "paz", "flor", "río", "casa", "vino", "nube"];

/// A sentence that fails exactly `kind` under the default configuration.
pub fn fault_sentence(kind: Reason, rng: &mut ChaCha8Rng) -> String {
    let digits = |rng: &mut ChaCha8Rng| format!("{:04}", rng.random_range(0..10_000));
    match kind {
        Reason::TooShort => ["Muy bien.", "Hasta pronto.", "Buenos días.", "Sin comentarios.", "Gracias."]
            .choose(rng)
            .expect("non-empty")
            .to_string(),
        Reason::TooLong => {
            let mut words = Vec::new();
            while words.len() < 330 {
                let part = [SUBJECTS, VERBS, OBJECTS, COMPLEMENTS]
                    .choose(rng)
                    .expect("non-empty")
                    .choose(rng)
                    .expect("non-empty");
                words.extend(part.split(' '));
            }
            capitalize(&words.join(" ")) + "."
        }
        Reason::LowAlphaRatio => {
            let w: Vec<&str> = SHORT_WORDS.choose_multiple(rng, 3).copied().collect();
            format!(
                "{} ★★★★ ★★★★ {} ★★★★ ★★★★ {} ★★★★ ★★★★.",
                capitalize(w[0]),
                w[1],
                w[2]
            )
        }
        Reason::HighDigitRatio => {
            let head = ["Pedido", "Factura", "Recibo", "Ticket"].choose(rng).expect("non-empty");
            format!(
                "{head} {} del día {} con clave {}.",
                digits(rng),
                digits(rng),
                digits(rng)
            )
        }
        Reason::HighUpperRatio => [
            "LA OFERTA DE HOY ES PARA TODOS LOS CLIENTES DE LA TIENDA.",
            "ENTRADA GRATUITA PARA LOS SOCIOS DEL CLUB DEPORTIVO.",
            "ÚLTIMOS DÍAS DE REBAJAS EN TODA LA COLECCIÓN DE INVIERNO.",
            "NO SE ADMITEN DEVOLUCIONES SIN EL TICKET DE COMPRA.",
        ]
        .choose(rng)
        .expect("non-empty")
        .to_string(),
        Reason::HighPunctRatio => [
            "Precio: (bajo), [nuevo]; {gratis}; <hoy>; 'ya'.",
            "Envío: (rápido), [seguro]; {barato}; <hoy>; 'ya'.",
            "Oferta: (hoy), [nuevo]; {todo}; <más>; 'ya'.",
        ]
        .choose(rng)
        .expect("non-empty")
        .to_string(),
        Reason::RepeatedChars => [
            "Me encantó este sitio, es increíble, holaaaaaaa a todos los amigos.",
            "Qué calor hace hoy en la ciudad, nooooooo puedo más con este verano.",
            "La fiesta del pueblo fue genial, graciassssss a todos los que vinieron.",
        ]
        .choose(rng)
        .expect("non-empty")
        .to_string(),
        Reason::BoilerplateMatch => [
            "Todos los derechos reservados por la empresa editora de este diario.",
            "Utilizamos cookies propias y de terceros para mejorar la navegación.",
            "Consulte nuestra Política de privacidad antes de enviar el formulario.",
            "Suscríbete a nuestro boletín para recibir las noticias de la semana.",
        ]
        .choose(rng)
        .expect("non-empty")
        .to_string(),
        Reason::WrongLanguage => [
            "The weather in the northern valley was cold and windy during the whole week.",
            "Our neighbours have painted their old wooden fence with a bright yellow colour.",
            "The children walked along the river while their parents prepared the dinner.",
            "Several visitors were waiting outside the museum when the doors finally opened.",
        ]
        .choose(rng)
        .expect("non-empty")
        .to_string(),
        other => panic!("no planted fault for {other}"),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantedConfig {
    pub seed: u64,
    pub documents: usize,
    pub min_sentences: usize,
    pub max_sentences: usize,
    /// Probability that a sentence slot holds a planted fault.
    pub fault_rate: f64,
    /// Probability that a sentence slot repeats an earlier clean sentence,
    /// from the same document or an earlier one.
    pub duplicate_rate: f64,
    /// Probability that a whole document repeats an earlier one.
    pub document_duplicate_rate: f64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            seed: 0,
            documents: 100,
            min_sentences: 1,
            max_sentences: 12,
            fault_rate: 0.1,
            duplicate_rate: 0.1,
            document_duplicate_rate: 0.02,
        }
    }
}

impl PlantedConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("fault_rate", self.fault_rate),
            ("duplicate_rate", self.duplicate_rate),
            ("document_duplicate_rate", self.document_duplicate_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Config(format!("{name} must be in [0, 1], got {r}")));
            }
        }
        if self.fault_rate + self.duplicate_rate > 1.0 {
            return Err(Error::Config("fault_rate + duplicate_rate exceeds 1".into()));
        }
        if self.min_sentences == 0 || self.min_sentences > self.max_sentences {
            return Err(Error::Config("need 1 <= min_sentences <= max_sentences".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceTruth {
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fault: Option<Reason>,
    /// `(document, sentence)` of the clean sentence this one copies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duplicate_of: Option<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentTruth {
    pub url: String,
    /// Sentences in document order, as the default field mask sees them.
    pub sentences: Vec<SentenceTruth>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub copy_of: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub documents: Vec<DocumentTruth>,
}

/// Counters the cleaning pipeline must report on a planted corpus, with
/// the default configuration.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub documents: u64,
    pub sentences: u64,
    pub faults: BTreeMap<Reason, u64>,
    pub clean_sentences: u64,
    pub intra_document_duplicates: u64,
    pub emptied_documents: u64,
    pub duplicate_documents: u64,
    pub duplicate_document_sentences: u64,
    pub stage_one_documents: u64,
    pub stage_one_sentences: u64,
    /// After the global pass.
    pub final_documents: u64,
    pub final_sentences: u64,
}

impl GroundTruth {
    pub fn planted_faults(&self) -> usize {
        self.sentences().filter(|s| s.fault.is_some()).count()
    }

    pub fn planted_duplicates(&self) -> usize {
        self.sentences().filter(|s| s.duplicate_of.is_some()).count()
    }

    pub fn sentences(&self) -> impl Iterator<Item = &SentenceTruth> {
        self.documents.iter().flat_map(|d| &d.sentences)
    }

    /// Replays filtering and both dedup stages on the labels.
    pub fn expected(&self) -> Expected {
        let mut e = Expected::default();
        let mut seen_docs: HashSet<Vec<&str>> = HashSet::new();
        let mut stage_one: Vec<Vec<&str>> = Vec::new();
        for d in &self.documents {
            e.documents += 1;
            e.sentences += d.sentences.len() as u64;
            let mut kept = Vec::new();
            for s in &d.sentences {
                match s.fault {
                    Some(r) => *e.faults.entry(r).or_insert(0) += 1,
                    None => kept.push(s.text.as_str()),
                }
            }
            e.clean_sentences += kept.len() as u64;
            if kept.is_empty() {
                e.emptied_documents += 1;
                continue;
            }
            let mut local = HashSet::new();
            let before = kept.len();
            kept.retain(|t| local.insert(*t));
            e.intra_document_duplicates += (before - kept.len()) as u64;
            if seen_docs.insert(kept.clone()) {
                e.stage_one_documents += 1;
                e.stage_one_sentences += kept.len() as u64;
                stage_one.push(kept);
            } else {
                e.duplicate_documents += 1;
                e.duplicate_document_sentences += kept.len() as u64;
            }
        }
        let mut global = HashSet::new();
        for doc in &stage_one {
            let fresh = doc.iter().filter(|t| global.insert(**t)).count() as u64;
            if fresh > 0 {
                e.final_documents += 1;
            }
            e.final_sentences += fresh;
        }
        e
    }
}

/// A generated crawl record with its labels.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedDocument {
    pub record: RawRecord,
    pub truth: DocumentTruth,
}

/// Streams planted documents. Clean sentences are unique across the whole
/// stream unless planted as duplicates.
pub struct PlantedGenerator {
    cfg: PlantedConfig,
    rng: ChaCha8Rng,
    used: HashSet<String>,
    /// Clean sentences emitted so far, with their positions.
    pool: Vec<(String, (usize, usize))>,
    recent: Vec<(usize, Vec<String>, Vec<SentenceTruth>)>,
    next_doc: usize,
}

impl PlantedGenerator {
    pub fn new(cfg: PlantedConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(PlantedGenerator {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
            used: HashSet::new(),
            pool: Vec::new(),
            recent: Vec::new(),
            next_doc: 0,
        })
    }

    fn fresh_sentence(&mut self) -> String {
        loop {
            let s = spanish_sentence(&mut self.rng);
            if self.used.insert(s.clone()) {
                return s;
            }
        }
    }

    pub fn next_document(&mut self) -> PlantedDocument {
        let doc = self.next_doc;
        self.next_doc += 1;
        let url = format!("https://planted.example.es/{}/{doc}", self.cfg.seed);
        let record = |paragraphs: Vec<String>| RawRecord {
            url: url.clone(),
            timestamp: Some(format!("2019-{:02}-01T00:00:00Z", doc % 12 + 1)),
            paragraphs,
            headers: Vec::new(),
            keywords: vec!["noticias".into(), "cultura".into()],
            link_texts: vec!["Inicio".into(), "Contacto".into()],
        };

        if !self.recent.is_empty() && self.rng.random_bool(self.cfg.document_duplicate_rate) {
            let (orig, paragraphs, sentences) = self.recent.choose(&mut self.rng).expect("non-empty").clone();
            let sentences = sentences
                .iter()
                .enumerate()
                .map(|(i, s)| SentenceTruth {
                    text: s.text.clone(),
                    fault: s.fault,
                    duplicate_of: s.fault.is_none().then_some(s.duplicate_of.unwrap_or((orig, i))),
                })
                .collect();
            return PlantedDocument {
                record: record(paragraphs),
                truth: DocumentTruth {
                    url,
                    sentences,
                    copy_of: Some(orig),
                },
            };
        }

        let n = self.rng.random_range(self.cfg.min_sentences..=self.cfg.max_sentences);
        let mut sentences: Vec<SentenceTruth> = Vec::with_capacity(n);
        let mut clean_here: Vec<usize> = Vec::new();
        for i in 0..n {
            let r: f64 = self.rng.random();
            let truth = if r < self.cfg.fault_rate {
                let kind = *FAULT_KINDS.choose(&mut self.rng).expect("non-empty");
                SentenceTruth {
                    text: fault_sentence(kind, &mut self.rng),
                    fault: Some(kind),
                    duplicate_of: None,
                }
            } else if r < self.cfg.fault_rate + self.cfg.duplicate_rate
                && !(clean_here.is_empty() && self.pool.is_empty())
            {
                let local = !clean_here.is_empty() && (self.pool.is_empty() || self.rng.random_bool(0.5));
                let (text, origin) = if local {
                    let j = *clean_here.choose(&mut self.rng).expect("non-empty");
                    (sentences[j].text.clone(), sentences[j].duplicate_of.unwrap_or((doc, j)))
                } else {
                    self.pool.choose(&mut self.rng).expect("non-empty").clone()
                };
                SentenceTruth {
                    text,
                    fault: None,
                    duplicate_of: Some(origin),
                }
            } else {
                let text = self.fresh_sentence();
                SentenceTruth {
                    text,
                    fault: None,
                    duplicate_of: None,
                }
            };
            if truth.fault.is_none() {
                clean_here.push(i);
                if truth.duplicate_of.is_none() {
                    self.pool.push((truth.text.clone(), (doc, i)));
                }
            }
            sentences.push(truth);
        }

        let mut paragraphs = Vec::new();
        let mut i = 0;
        while i < sentences.len() {
            let take = self.rng.random_range(1..=3).min(sentences.len() - i);
            let texts: Vec<&str> = sentences[i..i + take].iter().map(|s| s.text.as_str()).collect();
            paragraphs.push(texts.join(" "));
            i += take;
        }

        if self.recent.len() == 256 {
            let k = self.rng.random_range(0..256);
            self.recent.swap_remove(k);
        }
        self.recent.push((doc, paragraphs.clone(), sentences.clone()));
        PlantedDocument {
            record: record(paragraphs),
            truth: DocumentTruth {
                url,
                sentences,
                copy_of: None,
            },
        }
    }
}

/// A planted corpus held in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantedCorpus {
    pub records: Vec<RawRecord>,
    pub ground_truth: GroundTruth,
}

pub fn generate_planted_corpus(cfg: &PlantedConfig) -> Result<PlantedCorpus> {
    let mut g = PlantedGenerator::new(cfg.clone())?;
    let mut records = Vec::with_capacity(cfg.documents);
    let mut truth = GroundTruth::default();
    for _ in 0..cfg.documents {
        let d = g.next_document();
        records.push(d.record);
        truth.documents.push(d.truth);
    }
    Ok(PlantedCorpus {
        records,
        ground_truth: truth,
    })
}

impl PlantedCorpus {
    /// Writes `corpus-XXX.jsonl` files (records split into `files`
    /// contiguous runs) and `truth/ground_truth.json`, kept in a subdirectory
    /// so the output directory can be fed straight to the pipeline.
    pub fn write(&self, out_dir: &Path, files: usize) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let files = files.max(1);
        let per_file = self.records.len().div_ceil(files).max(1);
        let mut paths = Vec::new();
        for (i, chunk) in self.records.chunks(per_file).enumerate() {
            let p = out_dir.join(format!("corpus-{i:03}.jsonl"));
            write_records(&p, chunk)?;
            paths.push(p);
        }
        if paths.is_empty() {
            let p = out_dir.join("corpus-000.jsonl");
            write_records(&p, &[])?;
            paths.push(p);
        }
        let truth_dir = out_dir.join("truth");
        std::fs::create_dir_all(&truth_dir).map_err(|e| Error::io(&truth_dir, e))?;
        let truth_path = truth_dir.join("ground_truth.json");
        let json = serde_json::to_string(&self.ground_truth).expect("truth serializes");
        std::fs::write(&truth_path, json).map_err(|e| Error::io(&truth_path, e))?;
        Ok(paths)
    }
}

fn write_records(path: &Path, records: &[RawRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for r in records {
        writeln!(out, "{}", r.to_json_line()).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Streams planted records into `files` JSONL files until about
/// `target_bytes` have been written; no ground truth is kept. Returns the
/// file paths and the byte count.
pub fn write_planted_bytes(
    cfg: &PlantedConfig,
    out_dir: &Path,
    files: usize,
    target_bytes: u64,
) -> Result<(Vec<PathBuf>, u64)> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut g = PlantedGenerator::new(cfg.clone())?;
    let files = files.max(1);
    let per_file = target_bytes.div_ceil(files as u64);
    let mut paths = Vec::new();
    let mut total = 0;
    for i in 0..files {
        let p = out_dir.join(format!("corpus-{i:03}.jsonl"));
        let mut out = BufWriter::new(File::create(&p).map_err(|e| Error::io(&p, e))?);
        let mut written = 0;
        while written < per_file {
            let line = g.next_document().record.to_json_line();
            writeln!(out, "{line}").map_err(|e| Error::io(&p, e))?;
            written += line.len() as u64 + 1;
        }
        out.flush().map_err(|e| Error::io(&p, e))?;
        total += written;
        paths.push(p);
    }
    Ok((paths, total))
}

struct LanguageTemplates {
    lang: &'static str,
    subjects: [&'static str; 8],
    verbs: [&'static str; 8],
    objects: [&'static str; 8],
    complements: [&'static str; 8],
}

const HELD_OUT: [LanguageTemplates; 4] = [
    LanguageTemplates {
        lang: "en",
        subjects: [
            "The old fisherman",
            "My younger sister",
            "A tired engineer",
            "The village baker",
            "Our new neighbour",
            "The school principal",
            "A famous painter",
            "The night nurse",
        ],
        verbs: ["bought", "repaired", "painted", "described", "forgot", "carried", "noticed", "cleaned"],
        objects: [
            "a wooden boat",
            "the broken window",
            "an empty bottle",
            "the heavy suitcase",
            "a small garden",
            "the kitchen table",
            "a long letter",
            "the red bicycle",
        ],
        complements: [
            "before the storm arrived",
            "without telling anyone",
            "after a long afternoon",
            "with great patience",
            "near the railway station",
            "during the winter holidays",
            "while the children slept",
            "for the first time",
        ],
    },
    LanguageTemplates {
        lang: "fr",
        subjects: [
            "Le vieux pêcheur",
            "Ma petite sœur",
            "Un ingénieur fatigué",
            "Le boulanger du village",
            "Notre nouveau voisin",
            "La directrice de l'école",
            "Un peintre célèbre",
            "L'infirmière de nuit",
        ],
        verbs: ["a acheté", "a réparé", "a peint", "a décrit", "a oublié", "a porté", "a remarqué", "a nettoyé"],
        objects: [
            "un bateau en bois",
            "la fenêtre cassée",
            "une bouteille vide",
            "la valise lourde",
            "un petit jardin",
            "la table de la cuisine",
            "une longue lettre",
            "le vélo rouge",
        ],
        complements: [
            "avant l'arrivée de l'orage",
            "sans rien dire à personne",
            "après un long après-midi",
            "avec beaucoup de patience",
            "près de la gare",
            "pendant les vacances d'hiver",
            "pendant que les enfants dormaient",
            "pour la première fois",
        ],
    },
    LanguageTemplates {
        lang: "pt",
        subjects: [
            "O velho pescador",
            "A minha irmã mais nova",
            "Um engenheiro cansado",
            "O padeiro da aldeia",
            "O nosso novo vizinho",
            "A diretora da escola",
            "Um pintor famoso",
            "A enfermeira da noite",
        ],
        verbs: ["comprou", "consertou", "pintou", "descreveu", "esqueceu", "carregou", "reparou em", "limpou"],
        objects: [
            "um barco de madeira",
            "a janela partida",
            "uma garrafa vazia",
            "a mala pesada",
            "um pequeno jardim",
            "a mesa da cozinha",
            "uma carta comprida",
            "a bicicleta vermelha",
        ],
        complements: [
            "antes de chegar a tempestade",
            "sem dizer nada a ninguém",
            "depois de uma longa tarde",
            "com muita paciência",
            "perto da estação de comboios",
            "durante as férias de inverno",
            "enquanto as crianças dormiam",
            "pela primeira vez",
        ],
    },
    LanguageTemplates {
        lang: "ca",
        subjects: [
            "El vell pescador",
            "La meva germana petita",
            "Un enginyer cansat",
            "El forner del poble",
            "El nostre nou veí",
            "La directora de l'escola",
            "Un pintor famós",
            "La infermera de nit",
        ],
        verbs: [
            "va comprar",
            "va arreglar",
            "va pintar",
            "va descriure",
            "va oblidar",
            "va portar",
            "es va fixar en",
            "va netejar",
        ],
        objects: [
            "una barca de fusta",
            "la finestra trencada",
            "una ampolla buida",
            "la maleta pesada",
            "un jardí petit",
            "la taula de la cuina",
            "una carta llarga",
            "la bicicleta vermella",
        ],
        complements: [
            "abans que arribés la tempesta",
            "sense dir res a ningú",
            "després d'una tarda llarga",
            "amb molta paciència",
            "a prop de l'estació de tren",
            "durant les vacances d'hivern",
            "mentre els nens dormien",
            "per primera vegada",
        ],
    },
];

/// Labeled sentences in es, en, fr, pt and ca, cycling through the
/// languages. None of them occurs in the bundled training text.
pub fn langid_held_out(seed: u64, n: usize) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| match i % 5 {
            0 => ("es".to_string(), spanish_sentence(&mut rng)),
            k => {
                let t = &HELD_OUT[k - 1];
                let text = format!(
                    "{} {} {} {}.",
                    t.subjects.choose(&mut rng).expect("non-empty"),
                    t.verbs.choose(&mut rng).expect("non-empty"),
                    t.objects.choose(&mut rng).expect("non-empty"),
                    t.complements.choose(&mut rng).expect("non-empty"),
                );
                (t.lang.to_string(), text)
            }
        })
        .collect()
}

/// A corpus of two topics whose words use disjoint letters, so they share
/// neither contexts nor character n-grams.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoTopicCorpus {
    pub lines: Vec<String>,
    pub topics: [Vec<String>; 2],
}

pub fn two_topic_corpus(seed: u64, words_per_topic: usize, lines: usize) -> TwoTopicCorpus {
    const ALPHABETS: [(&[u8], &[u8]); 2] = [(b"bcdfgh", b"aei"), (b"mnprst", b"ou")];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topics = ALPHABETS.map(|(consonants, vowels)| {
        let mut seen = HashSet::new();
        let mut words = Vec::with_capacity(words_per_topic);
        while words.len() < words_per_topic {
            let syllables = rng.random_range(2..=3);
            let w: String = (0..syllables)
                .flat_map(|_| {
                    [
                        *consonants.choose(&mut rng).expect("non-empty") as char,
                        *vowels.choose(&mut rng).expect("non-empty") as char,
                    ]
                })
                .collect();
            if seen.insert(w.clone()) {
                words.push(w);
            }
        }
        words
    });
    let lines = (0..lines)
        .map(|i| {
            let topic = &topics[i % 2];
            let len = rng.random_range(8..=12);
            (0..len)
                .map(|_| topic.choose(&mut rng).expect("non-empty").as_str())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    TwoTopicCorpus { lines, topics }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::langid::{bundled_profiles, IdentifyConfig, LanguageIdentifier};
    use crate::quality::{assess_text, QualityConfig};
    use crate::segment::Segmenter;

    fn language_ok(id: &LanguageIdentifier, text: &str, expect: &str) -> bool {
        let l = id.identify(text).lang;
        l.as_str() == expect || (expect == "es" && l.is_undetermined())
    }

    #[test]
    fn every_fault_trips_exactly_its_reason() {
        let cfg = QualityConfig::default();
        let id = LanguageIdentifier::new(bundled_profiles(), IdentifyConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kind in FAULT_KINDS {
            for _ in 0..40 {
                let s = fault_sentence(kind, &mut rng);
                let reasons: Vec<Reason> = assess_text(&s, &cfg).reasons().collect();
                if kind == Reason::WrongLanguage {
                    assert!(reasons.is_empty(), "{s}: {reasons:?}");
                    assert!(language_ok(&id, &s, "en"), "{s}");
                } else {
                    assert_eq!(reasons, vec![kind], "{s}");
                    assert!(language_ok(&id, &s, "es"), "{s}: {}", id.identify(&s).lang);
                }
            }
        }
    }

    #[test]
    fn clean_sentences_pass_and_stay_whole() {
        let cfg = QualityConfig::default();
        let id = LanguageIdentifier::new(bundled_profiles(), IdentifyConfig::default()).unwrap();
        let seg = Segmenter::default();
        let corpus = generate_planted_corpus(&PlantedConfig {
            documents: 400,
            fault_rate: 0.3,
            ..Default::default()
        })
        .unwrap();
        for (rec, truth) in corpus.records.iter().zip(&corpus.ground_truth.documents) {
            let split: Vec<String> = rec
                .paragraphs
                .iter()
                .flat_map(|p| seg.split_sentences(p))
                .map(|s| s.text)
                .collect();
            let expect: Vec<&String> = truth.sentences.iter().map(|s| &s.text).collect();
            assert_eq!(split.iter().collect::<Vec<_>>(), expect);
            for s in truth.sentences.iter().filter(|s| s.fault.is_none()) {
                assert!(assess_text(&s.text, &cfg).accepted(), "{}", s.text);
                assert!(language_ok(&id, &s.text, "es"), "{}", s.text);
            }
        }
    }

    #[test]
    fn seeded_and_reproducible() {
        let cfg = PlantedConfig::default();
        assert_eq!(generate_planted_corpus(&cfg).unwrap(), generate_planted_corpus(&cfg).unwrap());
        let other = PlantedConfig { seed: 1, ..cfg.clone() };
        assert_ne!(generate_planted_corpus(&cfg).unwrap(), generate_planted_corpus(&other).unwrap());
    }

    #[test]
    fn zero_rates_plant_nothing() {
        let c = generate_planted_corpus(&PlantedConfig {
            fault_rate: 0.0,
            duplicate_rate: 0.0,
            document_duplicate_rate: 0.0,
            ..Default::default()
        })
        .unwrap();
        let t = &c.ground_truth;
        assert_eq!((t.planted_faults(), t.planted_duplicates()), (0, 0));
        let e = t.expected();
        assert_eq!(e.final_sentences, e.sentences);
    }

    #[test]
    fn duplicates_link_to_clean_originals() {
        let c = generate_planted_corpus(&PlantedConfig {
            documents: 200,
            duplicate_rate: 0.5,
            document_duplicate_rate: 0.1,
            ..Default::default()
        })
        .unwrap();
        let docs = &c.ground_truth.documents;
        assert!(c.ground_truth.planted_duplicates() > 100);
        for d in docs {
            for s in &d.sentences {
                if let Some((od, os)) = s.duplicate_of {
                    let orig = &docs[od].sentences[os];
                    assert_eq!(orig.text, s.text);
                    assert!(orig.fault.is_none() && orig.duplicate_of.is_none());
                }
            }
        }
        let e = c.ground_truth.expected();
        let distinct: HashSet<&str> = c
            .ground_truth
            .sentences()
            .filter(|s| s.fault.is_none())
            .map(|s| s.text.as_str())
            .collect();
        assert_eq!(e.final_sentences, distinct.len() as u64);
    }

    #[test]
    fn rates_validated() {
        let bad = PlantedConfig {
            fault_rate: 1.5,
            ..Default::default()
        };
        assert!(matches!(generate_planted_corpus(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn held_out_languages_cycle() {
        let set = langid_held_out(3, 10);
        let langs: Vec<&str> = set.iter().map(|(l, _)| l.as_str()).collect();
        assert_eq!(langs, ["es", "en", "fr", "pt", "ca", "es", "en", "fr", "pt", "ca"]);
        assert!(set.iter().all(|(_, t)| t.chars().count() >= 20));
    }

    #[test]
    fn topics_share_no_letters() {
        let c = two_topic_corpus(1, 20, 10);
        let letters = |ws: &[String]| -> HashSet<char> { ws.iter().flat_map(|w| w.chars()).collect() };
        assert!(letters(&c.topics[0]).is_disjoint(&letters(&c.topics[1])));
        assert_eq!(c.lines.len(), 10);
    }
}
