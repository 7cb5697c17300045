//! Namespaces and predicate IRIs.

use crate::store::Iri;

pub mod ns {
    pub const LEXEBI: &str = "http://www.ebi.ac.uk/Rebholz/core/lexebi#";
    pub const OWL: &str = "http://www.w3.org/2002/07/owl#";
    pub const EBI: &str = "http://www.ebi.ac.uk/Rebholz/core/";
    pub const OBO: &str = "http://purl.obolibrary.org/obo/";
    pub const EXPASY: &str = "http://www.expasy.org/enzyme/";
    pub const TAXO: &str = "http://purl.org/obo/owl/NCBITaxon#";
    pub const INTERPRO: &str = "http://www.ebi.ac.uk/interpro/";
    pub const UMLS: &str = "http://url_umls#";
    pub const UNIPROT: &str = "http://purl.uniprot.org/uniprot/";
    pub const PUBMED: &str = "http://www.ncbi.nlm.nih.gov/pubmed/";
    pub const DC: &str = "http://purl.org/dc/elements/1.1/";
    pub const CALBC: &str = "http://www.ebi.ac.uk/Rebholz/core/calbc#";
    pub const NODE: &str = "urn:calbc:node:";
}

fn term(base: &str, local: &str) -> Iri {
    Iri::new(format!("{base}{local}")).expect("vocabulary IRIs are valid")
}

macro_rules! vocab {
    ($base:expr; $($f:ident => $local:literal),* $(,)?) => {
        $(pub fn $f() -> Iri { super::term($base, $local) })*
    };
}

pub mod dc {
    use super::*;
    vocab!(ns::DC; title => "title", date => "date", creator => "creator", source => "source");
}

pub mod calbc {
    use super::*;
    vocab!(ns::CALBC;
        has_annotation => "hasAnnotation",
        has_label => "hasLabel",
        has_group => "hasGroup",
        has_concept => "hasConcept",
        has_sentence => "hasSentence",
        has_entity => "hasEntity",
        index => "index",
        mentions_gene => "mentionsGene",
        has_factor => "hasFactor",
    );
}

pub mod lexebi {
    use super::*;
    vocab!(ns::LEXEBI;
        preferred_term => "preferredTerm",
        semantic_group => "semanticGroup",
        has_variant => "hasVariant",
        surface_form => "surfaceForm",
        frequency_in_medline => "frequencyInMedline",
    );
}

pub mod owl {
    use super::*;
    vocab!(ns::OWL; same_as => "sameAs");
}

pub mod uniprot {
    use super::*;
    vocab!(ns::UNIPROT;
        organism => "organism",
        classified_with => "classifiedWith",
        interacts_with => "interactsWith",
        citation => "citation",
    );

    /// `uniprot:sameAs{Resource}`, keeping only alphanumeric characters of
    /// the resource name.
    pub fn same_as(resource: &str) -> Iri {
        let name: String = resource.chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        super::term(ns::UNIPROT, &format!("sameAs{name}"))
    }
}
