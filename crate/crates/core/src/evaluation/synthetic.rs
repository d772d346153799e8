//! Seeded synthetic tender corpora.
//!
//! Every document belongs to one procurement family. Historical templates and
//! held-out gold documents are assembled from the same clause pool with
//! independent paraphrase and subset choices, so a template from the right
//! family is close to the gold document but never identical to it.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ExperimentCase;
use crate::corpus::{tags, Corpus, PurchaseItem, TableBlock, TenderDocument};
use crate::knowledge_base::{KnowledgeGraph, LoadReport, PurchaseListExtractor};
use crate::retrieval::Requirement;

struct Family {
    projects: &'static [&'static str],
    purposes: &'static [&'static str],
    items: &'static [(&'static str, &'static str)],
    clauses: &'static [[&'static str; 2]],
    qualifications: &'static [(&'static str, &'static str)],
}

const PURCHASERS: &[&str] = &[
    "City Central Hospital",
    "Riverside People's Hospital",
    "Northern District Health Center",
    "Provincial Maternity and Child Hospital",
    "Eastern Medical University Hospital",
    "Lakeside Center for Disease Control",
];

const CONTACTS: &[&str] = &[
    "Li Wei",
    "Zhang Min",
    "Wang Fang",
    "Chen Jie",
    "Liu Yang",
    "Zhao Lei",
];

const LOCATIONS: &[&str] = &[
    "Room 301, Procurement Office",
    "the public resource trading center, hall B",
    "Administration Building, floor 2",
    "the municipal tender hall",
];

const BOILERPLATE_HEAD: &[[&str; 2]] = &[
    [
        "Tender announcement for {{project_name}}.",
        "Public tender notice: {{project_name}}.",
    ],
    [
        "{{purchaser_unit}} invites qualified suppliers to submit sealed bids for the goods listed below.",
        "Qualified suppliers are invited by {{purchaser_unit}} to submit sealed bids for the listed goods.",
    ],
];

const BOILERPLATE_TAIL: &[[&str; 2]] = &[
    [
        "Contact person: {{contact_person}}, telephone {{contact_phone}}.",
        "For enquiries contact {{contact_person}} at {{contact_phone}}.",
    ],
    [
        "Bids must be delivered to {{bid_location}} before {{deadline}}. Late bids will be rejected.",
        "The bid submission deadline is {{deadline}} at {{bid_location}}; late bids are not accepted.",
    ],
    [
        "The maximum budget for this project is {{budget}} yuan, including delivery and installation.",
        "The budget ceiling is {{budget}} yuan inclusive of delivery and installation.",
    ],
    [
        "Procurement scope: {{gen:scope|Summarize the procurement scope}}",
        "Scope of supply: {{gen:scope|Summarize the procurement scope}}",
    ],
];

const PURCHASE_COLUMNS: [&str; 3] = ["Item Name", "Quantity", "Unit"];
const QUALIFICATION_COLUMNS: [&str; 2] = ["Requirement", "Detail"];

const FAMILIES: &[Family] = &[
    Family {
        projects: &[
            "Influenza A virus detection reagents procurement",
            "Respiratory pathogen nucleic acid testing kits procurement",
            "Influenza antigen rapid testing supplies procurement",
        ],
        purposes: &[
            "Seasonal influenza screening in outpatient clinics",
            "Respiratory infection surveillance for the winter season",
        ],
        items: &[
            ("influenza A virus detection kit", "box"),
            ("PCR kit", "box"),
            ("nucleic acid extraction reagent", "box"),
            ("sampling swab", "piece"),
            ("virus transport medium", "tube"),
            ("influenza B antigen test strip", "box"),
            ("PCR reaction plate", "piece"),
            ("positive control reagent", "vial"),
        ],
        clauses: &[
            [
                "All reagents must hold a valid medical device registration certificate issued by the national authority.",
                "Every reagent offered shall carry a valid national medical device registration certificate.",
            ],
            [
                "The remaining shelf life of reagents on delivery shall be no less than twelve months.",
                "On delivery, reagents must have at least twelve months of shelf life remaining.",
            ],
            [
                "Reagents must be transported under a cold chain between 2 and 8 degrees Celsius with temperature records.",
                "Cold-chain transport at 2 to 8 degrees Celsius is mandatory and temperature logs must be supplied.",
            ],
            [
                "The supplier shall provide on-site training on assay operation for laboratory staff.",
                "Laboratory personnel shall receive on-site assay operation training from the supplier.",
            ],
            [
                "Detection sensitivity for influenza A shall not be lower than 95 percent in clinical evaluation.",
                "Clinical evaluation must show influenza A detection sensitivity of at least 95 percent.",
            ],
            [
                "Kits shall be compatible with the real-time PCR instruments already installed in the laboratory.",
                "Compatibility with the laboratory's installed real-time PCR instruments is required for all kits.",
            ],
            [
                "Each kit includes positive and negative controls sufficient for every run.",
                "Positive and negative controls for every run must be included in each kit.",
            ],
            [
                "The supplier replaces any reagent batch that fails internal quality control within 72 hours.",
                "Reagent batches failing internal quality control are replaced by the supplier within 72 hours.",
            ],
        ],
        qualifications: &[
            ("Registration certificate", "Valid registration for in vitro diagnostic reagents"),
            ("Distribution license", "Class III medical device distribution license"),
            ("Cold chain capacity", "Own refrigerated vehicles or a contracted cold-chain carrier"),
            ("Past performance", "At least three similar reagent supply contracts in the last three years"),
        ],
    },
    Family {
        projects: &[
            "CT scanner equipment procurement",
            "Color Doppler ultrasound system procurement",
            "Digital radiography imaging equipment procurement",
        ],
        purposes: &[
            "Upgrade of the radiology department imaging capacity",
            "Replacement of aging diagnostic imaging devices",
        ],
        items: &[
            ("64-slice CT scanner", "set"),
            ("color Doppler ultrasound system", "set"),
            ("digital radiography system", "set"),
            ("ultrasound transducer probe", "piece"),
            ("imaging workstation", "set"),
            ("lead protective apron", "piece"),
            ("contrast injector", "set"),
            ("DICOM film printer", "set"),
        ],
        clauses: &[
            [
                "The equipment shall be covered by a full warranty of no less than three years from acceptance.",
                "A full warranty period of at least three years after acceptance is required for all equipment.",
            ],
            [
                "The supplier is responsible for installation, calibration and acceptance testing on site.",
                "Installation, calibration and on-site acceptance testing are the responsibility of the supplier.",
            ],
            [
                "Radiation shielding of the installation room must pass inspection by the environmental protection authority.",
                "The installation room's radiation shielding shall be inspected and approved by the environmental authority.",
            ],
            [
                "Maintenance engineers shall respond within 4 hours and arrive on site within 24 hours of a fault report.",
                "After a fault report, engineers must respond in 4 hours and be on site within 24 hours.",
            ],
            [
                "Images must be exported in DICOM 3.0 format and integrate with the existing PACS.",
                "The system shall export DICOM 3.0 images and connect to the hospital PACS without extra cost.",
            ],
            [
                "The CT gantry aperture shall be at least 70 centimeters with a maximum scan speed below 0.5 seconds per rotation.",
                "A gantry aperture of no less than 70 centimeters and rotation time under 0.5 seconds are required.",
            ],
            [
                "Dose reduction software compliant with current radiation protection standards must be included.",
                "The offer must include dose reduction software meeting current radiation protection standards.",
            ],
            [
                "Application specialists shall train radiographers for no less than two weeks after installation.",
                "After installation, application specialists train the radiographers for at least two weeks.",
            ],
        ],
        qualifications: &[
            ("Manufacturer authorization", "Authorization letter from the equipment manufacturer"),
            ("Radiation safety license", "Valid radiation safety license for installation work"),
            ("Service network", "Local service engineers within 100 kilometers"),
            ("Past performance", "Installed at least five comparable imaging systems"),
        ],
    },
    Family {
        projects: &[
            "Laboratory consumables annual procurement",
            "Clinical laboratory plastic consumables procurement",
            "Pipette tips and centrifuge tubes supply procurement",
        ],
        purposes: &[
            "Routine supply of consumables for the clinical laboratory",
            "Annual replenishment of laboratory disposable materials",
        ],
        items: &[
            ("pipette tip", "box"),
            ("centrifuge tube", "pack"),
            ("petri dish", "pack"),
            ("cryogenic vial", "pack"),
            ("microscope slide", "box"),
            ("nitrile examination glove", "box"),
            ("blood collection tube", "box"),
            ("specimen container", "pack"),
        ],
        clauses: &[
            [
                "Consumables must be sterile, DNase and RNase free, and individually lot numbered.",
                "All consumables shall be sterile, free of DNase and RNase, and carry lot numbers.",
            ],
            [
                "Orders are placed in batches and each batch shall be delivered within 48 hours.",
                "Delivery is by batch on demand, with each order fulfilled within 48 hours.",
            ],
            [
                "Outer packaging shall show product name, specification, lot number and expiry date.",
                "Product name, specification, lot number and expiry date must appear on the outer packaging.",
            ],
            [
                "Bidders shall provide samples of every consumable for evaluation before contract award.",
                "Samples of each consumable must be submitted for evaluation prior to award.",
            ],
            [
                "Unit prices remain fixed for the whole contract year regardless of market changes.",
                "Prices are fixed for the contract year and may not be adjusted for market changes.",
            ],
            [
                "Pipette tips shall fit the major pipette brands used in the laboratory without leakage.",
                "Tips must fit the laboratory's major pipette brands with no leakage.",
            ],
            [
                "Centrifuge tubes shall withstand 20000 g without cracking.",
                "Tubes must resist cracking up to 20000 g of centrifugal force.",
            ],
            [
                "Consumables with a remaining shelf life under one year will be refused at delivery.",
                "Deliveries with less than one year of remaining shelf life are refused.",
            ],
        ],
        qualifications: &[
            ("Business license", "Valid business license covering laboratory supplies"),
            ("Quality system", "ISO 13485 or ISO 9001 certification"),
            ("Delivery capacity", "Warehouse within the city for emergency orders"),
            ("Sample provision", "Free samples of each consumable for evaluation"),
        ],
    },
    Family {
        projects: &[
            "Ward furniture procurement",
            "Electric hospital bed procurement",
            "Outpatient waiting area furniture procurement",
        ],
        purposes: &[
            "Furnishing the newly built inpatient building",
            "Replacement of worn ward beds and cabinets",
        ],
        items: &[
            ("electric hospital bed", "piece"),
            ("bedside cabinet", "piece"),
            ("overbed table", "piece"),
            ("waiting room chair", "set"),
            ("medical trolley", "piece"),
            ("nurse station counter", "set"),
            ("privacy curtain track", "meter"),
            ("wardrobe locker", "piece"),
        ],
        clauses: &[
            [
                "Steel frames shall be coated with antibacterial epoxy powder of at least 60 microns.",
                "Frames must be steel with an antibacterial epoxy powder coating no thinner than 60 microns.",
            ],
            [
                "Beds shall support a safe working load of at least 250 kilograms.",
                "The safe working load of each bed must be 250 kilograms or more.",
            ],
            [
                "Furniture is assembled on site by the supplier and all packaging waste is removed.",
                "The supplier assembles the furniture on site and removes all packaging waste.",
            ],
            [
                "Wood-based panels shall meet the E1 formaldehyde emission class.",
                "Formaldehyde emission of all wood-based panels must meet class E1.",
            ],
            [
                "A structural warranty of five years applies to frames and welds.",
                "Frames and welds carry a five year structural warranty.",
            ],
            [
                "Electric beds provide height, backrest and knee adjustment with a battery backup.",
                "Height, backrest and knee functions of electric beds are motorized and battery backed.",
            ],
            [
                "Casters are 125 millimeters in diameter with central locking.",
                "Central locking casters of 125 millimeter diameter are fitted.",
            ],
            [
                "Side rails meet the entrapment zone requirements of the bed safety standard.",
                "Side rails comply with the entrapment requirements of the bed safety standard.",
            ],
        ],
        qualifications: &[
            ("Manufacturing capacity", "Own furniture factory or authorized manufacturer"),
            ("Environmental certificate", "Product environmental labelling certificate"),
            ("Fire safety", "Flame retardant test report for upholstery"),
            ("Past performance", "Furnished at least two hospital buildings"),
        ],
    },
    Family {
        projects: &[
            "Hospital information system server procurement",
            "Desktop computers and laptops procurement",
            "Data center network equipment procurement",
        ],
        purposes: &[
            "Expansion of the hospital information system infrastructure",
            "Replacement of office computers for clinical departments",
        ],
        items: &[
            ("rack server", "set"),
            ("desktop computer", "set"),
            ("laptop computer", "set"),
            ("network switch", "set"),
            ("storage array", "set"),
            ("uninterruptible power supply", "set"),
            ("laser printer", "set"),
            ("firewall appliance", "set"),
        ],
        clauses: &[
            [
                "All machines shall ship with a genuine licensed operating system preinstalled.",
                "A genuine, licensed operating system must be preinstalled on every machine.",
            ],
            [
                "On-site warranty service is provided for three years with next business day response.",
                "Three years of on-site warranty with next business day response is required.",
            ],
            [
                "Failed hard disks remain the property of the purchaser to protect patient data.",
                "To protect patient data, failed disks are retained by the purchaser.",
            ],
            [
                "Equipment must be compatible with the existing hospital information system and network.",
                "Compatibility with the current hospital information system and network is mandatory.",
            ],
            [
                "Products shall hold a national energy efficiency certification.",
                "National energy efficiency certification is required for all products.",
            ],
            [
                "Servers shall have at least two processors, 256 GB of memory and redundant power supplies.",
                "Each server needs two or more processors, 256 GB of memory and redundant power.",
            ],
            [
                "Network switches support 10 gigabit uplinks and centralized management.",
                "Switches provide 10 gigabit uplinks and can be managed centrally.",
            ],
            [
                "The supplier migrates existing data and verifies integrity before decommissioning old equipment.",
                "Existing data is migrated and verified by the supplier before old equipment is retired.",
            ],
        ],
        qualifications: &[
            ("Manufacturer authorization", "Authorization from the hardware vendor for this bid"),
            ("Information security", "Level three information security service qualification"),
            ("Service capacity", "Certified engineers available for on-site support"),
            ("Past performance", "Three or more hospital IT infrastructure contracts"),
        ],
    },
    Family {
        projects: &[
            "Surgical instrument sets procurement",
            "Minimally invasive laparoscopic instruments procurement",
            "Orthopedic surgical tools procurement",
        ],
        purposes: &[
            "Equipping the new operating theatres",
            "Replenishment of surgical instruments for the surgery department",
        ],
        items: &[
            ("laparoscopic grasper", "piece"),
            ("surgical scissors", "piece"),
            ("needle holder", "piece"),
            ("hemostatic forceps", "piece"),
            ("trocar", "piece"),
            ("bone drill", "set"),
            ("sterilization container", "piece"),
            ("electrosurgical pencil", "piece"),
        ],
        clauses: &[
            [
                "Instruments shall be made of medical grade stainless steel resistant to corrosion.",
                "Corrosion resistant, medical grade stainless steel is required for all instruments.",
            ],
            [
                "Instruments must withstand repeated steam sterilization at 134 degrees Celsius.",
                "Repeated 134 degree Celsius steam sterilization shall not damage the instruments.",
            ],
            [
                "Each instrument carries a laser-marked serial number for traceability.",
                "Laser-marked serial numbers on every instrument ensure traceability.",
            ],
            [
                "Defective instruments shall be repaired or replaced within 7 days.",
                "The supplier repairs or replaces any defective instrument within 7 days.",
            ],
            [
                "Sets are delivered in labelled trays with a printed inventory list.",
                "Each set arrives in a labelled tray together with a printed inventory list.",
            ],
            [
                "Laparoscopic instruments shall be fully dismantlable for cleaning.",
                "All laparoscopic instruments must dismantle completely for cleaning.",
            ],
            [
                "Insulation of electrosurgical instruments passes a high voltage leakage test.",
                "Electrosurgical instruments pass a high voltage insulation leakage test.",
            ],
            [
                "Jaw alignment and ratchet function are checked on each instrument before shipment.",
                "Every instrument has its jaw alignment and ratchet checked before shipment.",
            ],
        ],
        qualifications: &[
            ("Registration certificate", "Valid registration for surgical instruments"),
            ("Manufacturer authorization", "Letter of authorization from the manufacturer"),
            ("Quality system", "ISO 13485 certified production"),
            ("Past performance", "Supplied instrument sets to at least three hospitals"),
        ],
    },
    Family {
        projects: &[
            "Disinfection products procurement",
            "Hospital cleaning and disinfection supplies procurement",
            "Hand hygiene products procurement",
        ],
        purposes: &[
            "Infection control supplies for all wards",
            "Annual supply of disinfectants and cleaning materials",
        ],
        items: &[
            ("chlorine disinfectant tablet", "bottle"),
            ("alcohol hand sanitizer", "bottle"),
            ("surface disinfectant wipe", "pack"),
            ("hydrogen peroxide disinfectant", "barrel"),
            ("mop head", "piece"),
            ("medical waste bag", "roll"),
            ("ultraviolet disinfection lamp", "piece"),
            ("sterilization indicator tape", "roll"),
        ],
        clauses: &[
            [
                "Each disinfection product shall have a hygiene safety evaluation report on file.",
                "A hygiene safety evaluation report must be filed for every disinfection product.",
            ],
            [
                "Labels must state the effective ingredient and its concentration.",
                "The effective ingredient and concentration shall be printed on each label.",
            ],
            [
                "Material safety data sheets are supplied with the first delivery.",
                "The first delivery must include material safety data sheets.",
            ],
            [
                "Goods are delivered directly to the storerooms of each ward.",
                "Delivery is made straight to the ward storerooms.",
            ],
            [
                "Products must not contain ingredients harmful to staff under prolonged use.",
                "No ingredient may be harmful to staff after prolonged use.",
            ],
            [
                "Hand sanitizer shall contain 70 to 80 percent ethanol with skin emollients.",
                "Sanitizers must contain 70 to 80 percent ethanol plus emollients for the skin.",
            ],
            [
                "Chlorine tablets release 500 milligrams of available chlorine per tablet.",
                "Each chlorine tablet releases 500 milligrams of available chlorine.",
            ],
            [
                "The supplier provides training on correct dilution and contact times.",
                "Staff are trained by the supplier on dilution ratios and contact times.",
            ],
        ],
        qualifications: &[
            ("Hygiene license", "Disinfection product hygiene safety evaluation filing"),
            ("Business license", "Valid business license covering disinfection products"),
            ("Test report", "Third-party efficacy test report"),
            ("Past performance", "Supplied disinfection products to at least two hospitals"),
        ],
    },
    Family {
        projects: &[
            "Rehabilitation therapy equipment procurement",
            "Physiotherapy devices procurement",
            "Rehabilitation training equipment procurement",
        ],
        purposes: &[
            "Establishing the rehabilitation medicine department",
            "Expansion of physiotherapy services",
        ],
        items: &[
            ("treadmill for gait training", "set"),
            ("electrotherapy stimulator", "set"),
            ("upper limb rehabilitation robot", "set"),
            ("parallel bars", "set"),
            ("traction table", "set"),
            ("ultrasound therapy device", "set"),
            ("balance training platform", "set"),
            ("wheelchair", "piece"),
        ],
        clauses: &[
            [
                "Devices shall hold a valid national registration certificate for rehabilitation equipment.",
                "A valid national registration for rehabilitation equipment is required for each device.",
            ],
            [
                "Therapy intensity must be adjustable and every device needs an emergency stop.",
                "Each device provides adjustable intensity and an emergency stop button.",
            ],
            [
                "The supplier trains therapists on operation and routine maintenance.",
                "Therapists receive operation and routine maintenance training from the supplier.",
            ],
            [
                "Spare parts shall remain available for at least eight years after delivery.",
                "Availability of spare parts must be guaranteed for eight years after delivery.",
            ],
            [
                "Acceptance includes functional tests of every device in the presence of the purchaser.",
                "Every device is functionally tested at acceptance with the purchaser present.",
            ],
            [
                "Gait training treadmills support body weight unloading and speeds from 0.1 kilometers per hour.",
                "Treadmills for gait training offer body weight support and start at 0.1 kilometers per hour.",
            ],
            [
                "Electrotherapy devices offer at least four independent output channels.",
                "Four or more independent output channels are required on electrotherapy devices.",
            ],
            [
                "Training data from robotic devices can be exported to the hospital information system.",
                "Robotic devices export training records to the hospital information system.",
            ],
        ],
        qualifications: &[
            ("Registration certificate", "Valid registration for rehabilitation devices"),
            ("Manufacturer authorization", "Authorization letter from the manufacturer"),
            ("Service capacity", "Maintenance team able to respond within 24 hours"),
            ("Past performance", "Supplied rehabilitation equipment to at least two hospitals"),
        ],
    },
];

/// Number of procurement families available to the generator.
pub fn family_count() -> usize {
    FAMILIES.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub templates: usize,
    pub cases: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            templates: 60,
            cases: 24,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSet {
    pub corpus: Corpus,
    pub cases: Vec<ExperimentCase>,
    /// Every item name known to the generator.
    pub taxonomy: Vec<PurchaseItem>,
    pub graph: KnowledgeGraph,
    pub graph_report: LoadReport,
    /// Family index per template, aligned with the corpus order.
    pub template_families: Vec<usize>,
    /// Family index per case.
    pub case_families: Vec<usize>,
}

fn pick<'a>(rng: &mut ChaCha8Rng, pair: &'a [&'a str; 2]) -> &'a str {
    pair[rng.random_range(0..2)]
}

/// Sorted random subset of `0..n` with a size in `min..=max`.
fn subset(rng: &mut ChaCha8Rng, n: usize, min: usize, max: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let size = rng.random_range(min..=max.min(n));
    let mut out = idx[..size].to_vec();
    out.sort_unstable();
    out
}

fn purchase_list(rng: &mut ChaCha8Rng, family: &Family) -> Vec<PurchaseItem> {
    subset(rng, family.items.len(), 3, 5)
        .into_iter()
        .map(|i| {
            let (name, unit) = family.items[i];
            PurchaseItem {
                name: name.to_string(),
                quantity: Some(rng.random_range(1..=50) as f64),
                unit: Some(unit.to_string()),
                spec: None,
            }
        })
        .collect()
}

fn purchase_table(items: &[PurchaseItem]) -> TableBlock {
    TableBlock::new(
        PURCHASE_COLUMNS.iter().map(|s| s.to_string()).collect(),
        items
            .iter()
            .map(|i| {
                vec![
                    i.name.clone(),
                    i.quantity
                        .map(|q| format!("{}", q as i64))
                        .unwrap_or_default(),
                    i.unit.clone().unwrap_or_default(),
                ]
            })
            .collect(),
    )
}

fn qualification_table(rng: &mut ChaCha8Rng, family: &Family) -> TableBlock {
    TableBlock::new(
        QUALIFICATION_COLUMNS
            .iter()
            .map(|s| s.to_string())
            .collect(),
        subset(rng, family.qualifications.len(), 3, 4)
            .into_iter()
            .map(|i| {
                let (a, b) = family.qualifications[i];
                vec![a.to_string(), b.to_string()]
            })
            .collect(),
    )
}

/// Tagged paragraphs: announcement head, a subset of the family clauses, then
/// contact, deadline, budget and scope.
fn tagged_paragraphs(rng: &mut ChaCha8Rng, family: &Family) -> Vec<String> {
    let mut out: Vec<String> = BOILERPLATE_HEAD
        .iter()
        .map(|p| pick(rng, p).to_string())
        .collect();
    for i in subset(rng, family.clauses.len(), 5, 7) {
        out.push(pick(rng, &family.clauses[i]).to_string());
    }
    out.extend(BOILERPLATE_TAIL.iter().map(|p| pick(rng, p).to_string()));
    out
}

fn fields(project: &str, purchaser: &str, purpose: &str) -> IndexMap<String, String> {
    IndexMap::from([
        ("project name".to_string(), project.to_string()),
        ("purchaser unit".to_string(), purchaser.to_string()),
        ("purpose".to_string(), purpose.to_string()),
    ])
}

fn answers(rng: &mut ChaCha8Rng) -> BTreeMap<String, String> {
    let month = rng.random_range(1..=12);
    let day = rng.random_range(1..=28);
    BTreeMap::from([
        (
            "contact_person".into(),
            CONTACTS.choose(rng).unwrap().to_string(),
        ),
        (
            "contact_phone".into(),
            format!("0571-{:08}", rng.random_range(10_000_000..100_000_000u32)),
        ),
        ("deadline".into(), format!("2024-{month:02}-{day:02} 09:30")),
        (
            "bid_location".into(),
            LOCATIONS.choose(rng).unwrap().to_string(),
        ),
        (
            "budget".into(),
            format!("{}", rng.random_range(5..500) * 10_000),
        ),
    ])
}

fn scope_summary(items: &[PurchaseItem]) -> String {
    let names: Vec<&str> = items.iter().map(|i| i.name.as_str()).collect();
    format!(
        "supply, delivery and after-sales service of {}",
        names.join(", ")
    )
}

fn template(rng: &mut ChaCha8Rng, id: String, family: &Family) -> TenderDocument {
    let project = family.projects.choose(rng).unwrap();
    let purchaser = PURCHASERS.choose(rng).unwrap();
    let purpose = family.purposes.choose(rng).unwrap();
    let paragraphs = tagged_paragraphs(rng, family);
    let items = purchase_list(rng, family);
    let tables = vec![purchase_table(&items), qualification_table(rng, family)];
    TenderDocument::new(
        id,
        fields(project, purchaser, purpose),
        paragraphs,
        tables,
        items,
    )
    .expect("generated template is valid")
}

fn gold_case(rng: &mut ChaCha8Rng, id: String, family: &Family) -> ExperimentCase {
    let project = family.projects.choose(rng).unwrap();
    let purchaser = PURCHASERS.choose(rng).unwrap();
    let purpose = family.purposes.choose(rng).unwrap();
    let doc_fields = fields(project, purchaser, purpose);
    let paragraphs = tagged_paragraphs(rng, family);
    let items = purchase_list(rng, family);
    let qualifications = qualification_table(rng, family);
    let answers = answers(rng);

    let mut values: BTreeMap<String, String> = answers.clone();
    values.insert("project_name".into(), project.to_string());
    values.insert("purchaser_unit".into(), purchaser.to_string());
    values.insert("scope".into(), scope_summary(&items));
    let paragraphs = paragraphs
        .iter()
        .map(|p| tags::substitute(p, |t| values[&t.key].clone()))
        .collect();
    let gold = TenderDocument::new(
        id.clone(),
        doc_fields.clone(),
        paragraphs,
        vec![purchase_table(&items), qualifications],
        items.clone(),
    )
    .expect("generated gold document is valid");
    ExperimentCase {
        id,
        requirement: Requirement {
            fields: doc_fields,
            c_list: Some(items),
        },
        answers,
        gold,
    }
}

/// Builds templates and held-out cases round-robin over the families, then a
/// purchase-list knowledge graph over the templates.
pub fn generate(config: &SyntheticConfig) -> SyntheticSet {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut docs = Vec::with_capacity(config.templates);
    let mut template_families = Vec::with_capacity(config.templates);
    for i in 0..config.templates {
        let f = i % FAMILIES.len();
        docs.push(template(&mut rng, format!("tpl-{i:04}"), &FAMILIES[f]));
        template_families.push(f);
    }
    let mut cases = Vec::with_capacity(config.cases);
    let mut case_families = Vec::with_capacity(config.cases);
    for i in 0..config.cases {
        let f = i % FAMILIES.len();
        cases.push(gold_case(&mut rng, format!("gold-{i:04}"), &FAMILIES[f]));
        case_families.push(f);
    }
    let (graph, graph_report) =
        KnowledgeGraph::from_documents(&docs, &PurchaseListExtractor::default());
    let taxonomy = FAMILIES
        .iter()
        .flat_map(|f| f.items.iter())
        .map(|(name, unit)| PurchaseItem {
            unit: Some(unit.to_string()),
            ..PurchaseItem::named(*name)
        })
        .collect();
    let corpus = Corpus::new(docs).expect("generated ids are unique");
    SyntheticSet {
        corpus,
        cases,
        taxonomy,
        graph,
        graph_report,
        template_families,
        case_families,
    }
}
