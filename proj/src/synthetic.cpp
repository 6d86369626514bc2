#include "tabsema/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>

namespace tabsema::synthetic {

namespace {

constexpr std::string_view kEx = "http://example.org/";

struct ClassDef {
    const char* id;
    const char* person_property;
    const char* date_property;
};

constexpr ClassDef kClasses[] = {
    {"Film", "director", "releaseDate"},
    {"Book", "author", "publicationDate"},
    {"Album", "artist", "recordingDate"},
    {"Company", "founder", "foundingDate"},
};

constexpr const char* kConsonants = "bdfgklmnprstvz";
constexpr const char* kVowels = "aeiou";

std::string pseudo_word(Rng& rng, std::size_t syllables) {
    std::string w;
    for (std::size_t i = 0; i < syllables; ++i) {
        w.push_back(kConsonants[rng.below(14)]);
        w.push_back(kVowels[rng.below(5)]);
        if (rng.uniform() < 0.4) w.push_back(kConsonants[rng.below(14)]);
    }
    return w;
}

std::vector<std::string> vocabulary(Rng& rng, std::size_t n, std::set<std::string>& used) {
    std::vector<std::string> words;
    while (words.size() < n) {
        auto w = pseudo_word(rng, 2 + rng.below(2));
        if (used.insert(w).second) words.push_back(std::move(w));
    }
    return words;
}

std::vector<double> noisy(Rng& rng, const std::vector<double>& center, double noise) {
    std::vector<double> v(center.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = center[k] + rng.uniform(-noise, noise);
    return v;
}

std::string iso_date(int y, int m, int d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
    return buf;
}

std::string one_decimal(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

std::string capitalize(std::string s) {
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

struct Entity {
    std::string iri;
    std::string label;
    std::string person;  // iri
    std::string date;    // ISO
    double score = 0.0;
    bool in_kb = true;
};

}  // namespace

Dataset generate(const Spec& spec) {
    Rng rng(spec.seed);
    Dataset data;
    std::set<std::string> used;
    const std::string res = std::string(kEx) + "resource/";
    const std::string ont = std::string(kEx) + "ontology/";
    auto entity = [](std::string iri) { return kb::make_entity(std::move(iri)); };
    auto text = [](std::string s) { return kb::make_literal(std::move(s), "en", ""); };
    auto typed = [](std::string s, std::string_view local) {
        return kb::make_literal(std::move(s), "", std::string(kb::kXsd) + std::string(local));
    };
    auto add = [&](std::string s, std::string_view p, kb::TripleObject o) {
        data.triples.push_back({std::move(s), std::string(p), std::move(o)});
    };

    // vocabularies and word vectors
    const std::size_t K = std::size(kClasses);
    std::vector<std::vector<double>> centers(K + 2, std::vector<double>(spec.dim));
    for (auto& c : centers)
        for (auto& x : c) x = rng.uniform(-1.0, 1.0);
    data.embeddings = EmbeddingTable(spec.dim);
    std::vector<std::vector<std::string>> class_words;
    for (std::size_t c = 0; c < K; ++c) {
        class_words.push_back(vocabulary(rng, 25, used));
        for (const auto& w : class_words.back()) data.embeddings.add(w, noisy(rng, centers[c], 0.6));
    }
    auto generic = vocabulary(rng, 60, used);
    for (const auto& w : generic) data.embeddings.add(w, noisy(rng, centers[K], 1.2));
    auto first_names = vocabulary(rng, 30, used);
    auto last_names = vocabulary(rng, 30, used);
    for (const auto& w : first_names) data.embeddings.add(w, noisy(rng, centers[K + 1], 0.6));
    for (const auto& w : last_names) data.embeddings.add(w, noisy(rng, centers[K + 1], 0.6));

    // schema
    std::vector<ClassCatalog::Entry> entries;
    add(ont + "Work", std::string(kb::kRdfsLabel), text("work"));
    add(ont + "Person", std::string(kb::kRdfsLabel), text("person"));
    for (const auto& def : kClasses) {
        std::string iri = ont + def.id;
        entries.push_back({def.id, iri});
        add(iri, kb::kRdfsSubClassOf, entity(ont + "Work"));
    }
    // Documentary is only reachable through subclass closure
    add(ont + "Documentary", kb::kRdfsSubClassOf, entity(ont + "Film"));
    data.catalog = ClassCatalog(std::move(entries));

    // people
    std::vector<std::pair<std::string, std::string>> persons;  // iri, label
    std::set<std::string> labels;
    while (persons.size() < spec.persons) {
        std::string label = capitalize(first_names[rng.below(first_names.size())]) + " " +
                            capitalize(last_names[rng.below(last_names.size())]);
        if (!labels.insert(label).second) continue;
        std::string iri = res + "Person_" + std::to_string(persons.size());
        add(iri, kb::kRdfType, entity(ont + "Person"));
        add(iri, kb::kRdfsLabel, text(label));
        add(iri, ont + "birthDate", typed(iso_date(1900 + static_cast<int>(rng.below(90)), 1 + static_cast<int>(rng.below(12)), 1 + static_cast<int>(rng.below(28))), "date"));
        persons.emplace_back(std::move(iri), std::move(label));
    }

    // class members
    std::vector<std::vector<Entity>> members(K);
    for (std::size_t c = 0; c < K; ++c) {
        const auto& def = kClasses[c];
        while (members[c].size() < spec.entities_per_class) {
            Entity e;
            const auto& vocab = class_words[c];
            bool neutral = rng.uniform() < 0.5;
            std::string w1 = neutral ? generic[rng.below(generic.size())] : vocab[rng.below(vocab.size())];
            std::string w2 = neutral ? generic[rng.below(generic.size())] : vocab[rng.below(vocab.size())];
            e.label = capitalize(w1) + " " + capitalize(w2);
            if (!labels.insert(e.label).second) continue;
            e.iri = res + def.id + "_" + std::to_string(members[c].size());
            e.person = persons[rng.below(persons.size())].first;
            e.date = iso_date(1950 + static_cast<int>(rng.below(70)), 1 + static_cast<int>(rng.below(12)), 1 + static_cast<int>(rng.below(28)));
            e.score = static_cast<double>(rng.below(100)) / 10.0;
            e.in_kb = rng.uniform() >= spec.unknown_entity_rate;
            if (e.in_kb) {
                bool documentary = c == 0 && rng.uniform() < 0.2;
                add(e.iri, kb::kRdfType, entity(ont + (documentary ? "Documentary" : def.id)));
                add(e.iri, kb::kRdfsLabel, text(e.label));
                add(e.iri, ont + def.person_property, entity(e.person));
                add(e.iri, ont + def.date_property, typed(e.date, "date"));
                add(e.iri, ont + "rating", typed(one_decimal(e.score), "decimal"));
            }
            members[c].push_back(std::move(e));
        }
    }

    // words split into class-marked and neutral names
    std::vector<std::vector<std::size_t>> marked(K), neutral(K);
    std::set<std::string> generic_set(generic.begin(), generic.end());
    for (std::size_t c = 0; c < K; ++c)
        for (std::size_t i = 0; i < members[c].size(); ++i) {
            auto first = normalize_phrase(members[c][i].label);
            first = first.substr(0, first.find(' '));
            (generic_set.contains(first) ? neutral[c] : marked[c]).push_back(i);
        }

    // tables
    for (std::size_t t = 0; t < spec.columns; ++t) {
        const std::size_t c = t % K;
        const std::size_t rows = spec.min_rows + rng.below(spec.max_rows - spec.min_rows + 1);
        const double ambiguity = rng.uniform(0.0, spec.max_ambiguity);
        std::vector<std::string> target, person_col, date_col, score_col;
        std::set<std::size_t> chosen;
        std::size_t attempts = 0;
        while (target.size() < rows) {
            const auto& pool = rng.uniform() < ambiguity ? neutral[c] : marked[c];
            const auto& fallback = pool.empty() ? marked[c] : pool;
            std::size_t i = fallback[rng.below(fallback.size())];
            if (!chosen.insert(i).second && ++attempts < 100) continue;
            const Entity& e = members[c][i];
            target.push_back(e.label);
            bool noise = rng.uniform() < spec.cell_noise;
            person_col.push_back(noise ? persons[rng.below(persons.size())].second
                                       : std::find_if(persons.begin(), persons.end(), [&](const auto& p) {
                                             return p.first == e.person;
                                         })->second);
            date_col.push_back(e.date);
            score_col.push_back(one_decimal(e.score));
        }
        std::vector<std::vector<std::string>> cols = {target, person_col, date_col, score_col};
        std::vector<std::size_t> order = {0, 1, 2, 3};
        rng.shuffle(order);
        std::vector<std::vector<std::string>> shuffled;
        std::size_t target_pos = 0;
        for (std::size_t k = 0; k < order.size(); ++k) {
            if (order[k] == 0) target_pos = k;
            shuffled.push_back(cols[order[k]]);
        }
        char id[16];
        std::snprintf(id, sizeof id, "t%03zu", t);
        data.tables.push_back(make_table(id, std::move(shuffled)));
        data.gold.push_back({id, target_pos, kClasses[c].id});
    }
    return data;
}

void write(const Dataset& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "tables");
    write_file_atomic(dir / "kb.nt", kb::to_ntriples(data.triples));
    data.catalog.save(dir / "catalog.csv");
    data.embeddings.save(dir / "embeddings.txt");
    save_gold(dir / "gold.csv", data.gold);
    for (const auto& t : data.tables) write_file_atomic(dir / "tables" / (t.id + ".json"), to_json(t));
}

}  // namespace tabsema::synthetic
