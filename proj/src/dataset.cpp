#include "fog/dataset.hpp"

#include <fstream>
#include <sstream>

#include "fog/image_io.hpp"

namespace fog {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    for (std::string f; std::getline(is, f, '\t');) out.push_back(f);
    return out;
}

std::string rel(const fs::path& p, const fs::path& base) { return fs::relative(p, base).generic_string(); }

}  // namespace

DatasetManifest DatasetManifest::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open manifest " + path.string());
    DatasetManifest m;
    m.root = path.parent_path();
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto f = split_tabs(line);
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (f.size() != 4) throw ManifestError(where + ": expected 4 tab-separated fields, got " + std::to_string(f.size()));
        DatasetRecord r;
        r.fog = m.root / f[0];
        if (f[2] == "paired") r.kind = RecordKind::Paired;
        else if (f[2] == "unpaired") r.kind = RecordKind::Unpaired;
        else throw ManifestError(where + ": kind must be 'paired' or 'unpaired', got '" + f[2] + "'");
        if (f[1] != "-") r.clear = m.root / f[1];
        if (f[3] != "-") r.depth = m.root / f[3];
        if (r.kind == RecordKind::Paired && !r.clear) throw ManifestError(where + ": paired record without a clear image");
        if (r.kind == RecordKind::Unpaired && r.clear) throw ManifestError(where + ": unpaired record names a clear image");
        for (const fs::path* p : {&r.fog, r.clear ? &*r.clear : nullptr, r.depth ? &*r.depth : nullptr})
            if (p && !fs::exists(*p)) throw ManifestError(where + ": missing file " + p->string());
        m.records.push_back(std::move(r));
    }
    return m;
}

void DatasetManifest::save(const fs::path& path) const {
    const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
    std::ofstream out(path);
    if (!out) throw ManifestError("cannot write manifest " + path.string());
    for (const auto& r : records) {
        out << rel(r.fog, base) << '\t' << (r.clear ? rel(*r.clear, base) : "-") << '\t'
            << (r.kind == RecordKind::Paired ? "paired" : "unpaired") << '\t' << (r.depth ? rel(*r.depth, base) : "-")
            << '\n';
    }
    if (!out) throw ManifestError("failed writing manifest " + path.string());
}

std::vector<Image> DatasetManifest::fog_images() const {
    std::vector<Image> out;
    for (const auto& r : records) out.push_back(load_image(r.fog));
    return out;
}

std::vector<Image> DatasetManifest::clear_images() const {
    std::vector<Image> out;
    for (const auto& r : records)
        if (r.clear) out.push_back(load_image(*r.clear));
    return out;
}

}  // namespace fog
