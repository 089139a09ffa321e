#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "somlist/annotations.hpp"
#include "somlist/datamix.hpp"
#include "somlist/errors.hpp"
#include "somlist/eval.hpp"
#include "somlist/image.hpp"
#include "somlist/listing.hpp"
#include "somlist/listparse.hpp"
#include "somlist/markalloc.hpp"
#include "somlist/pipeline.hpp"
#include "somlist/sidecar.hpp"
#include "somlist/textgen.hpp"

namespace py = pybind11;
using namespace som;

namespace {

using MaskArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

BinaryMask mask_from_array(const MaskArray& a) {
    if (a.ndim() != 2) {
        throw py::value_error("mask must be a 2-D array");
    }
    const auto h = static_cast<int>(a.shape(0));
    const auto w = static_cast<int>(a.shape(1));
    BinaryMask m(w, h);
    auto r = a.unchecked<2>();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            m.set(x, y, r(y, x) != 0);
        }
    }
    return m;
}

MaskArray mask_to_array(const BinaryMask& m) {
    MaskArray a({m.height(), m.width()});
    auto r = a.mutable_unchecked<2>();
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            r(y, x) = m.at(x, y) ? 1 : 0;
        }
    }
    return a;
}

py::list items_to_py(const std::vector<ListingItem>& items) {
    py::list out;
    for (const auto& it : items) {
        out.append(py::make_tuple(it.tag_id, it.description));
    }
    return out;
}

py::dict run_command(const CommandResult& r, const std::ostringstream& log) {
    py::dict d;
    d["summary"] = r.summary.dump();
    d["exit_code"] = r.exit_code;
    d["log"] = log.str();
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Set-of-Mark dataset toolkit";

    static py::exception<Error> base(m, "SomError");
    static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
    static py::exception<DataError> data_error(m, "DataError", base.ptr());
    static py::exception<IoError> io_error(m, "IoError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            py::set_error(config_error, e.what());
        } catch (const DataError& e) {
            py::set_error(data_error, e.what());
        } catch (const IoError& e) {
            py::set_error(io_error, e.what());
        } catch (const Error& e) {
            py::set_error(base, e.what());
        }
    });

    // geometry
    m.def("rle_encode", [](const MaskArray& a) { return encode_rle(mask_from_array(a)).counts; },
          "Column-major COCO run lengths of a mask.");
    m.def("rle_decode", [](int h, int w, const std::vector<std::uint32_t>& counts) {
        return mask_to_array(decode_rle(h, w, counts));
    });
    m.def("rle_counts_from_string", &rle_counts_from_string);
    m.def("rle_counts_to_string", [](const std::vector<std::uint32_t>& c) { return rle_counts_to_string(c); });
    m.def("rasterize_polygon", [](const std::vector<double>& pts, int w, int h) {
        return mask_to_array(rasterize_polygon(pts, w, h));
    });
    m.def("anchor_point", [](const MaskArray& a) {
        const Point p = anchor_point(mask_from_array(a));
        return py::make_tuple(p.x, p.y);
    });
    m.def("chebyshev_distance", [](const MaskArray& a) {
        const BinaryMask mask = mask_from_array(a);
        const auto d = chebyshev_distance(mask);
        py::array_t<int> out({mask.height(), mask.width()});
        std::copy(d.begin(), d.end(), out.mutable_data());
        return out;
    });

    // tagging
    m.def(
        "tag_image",
        [](const std::filesystem::path& annotations, std::int64_t image_id, const std::filesystem::path& image,
           int level) {
            const AnnotationSet set = load_annotation_file(annotations);
            const TaggedImage t = tag_image(set, image_id, read_image(image), GranularityLevel::standard(level), {});
            const TagSidecar s = make_sidecar(set, t, "", level);
            return py::make_tuple(py::bytes(encode_png(t.pixels)), sidecar_to_json(s));
        },
        py::arg("annotations"), py::arg("image_id"), py::arg("image"), py::arg("level") = 2,
        "Returns (tagged PNG bytes, sidecar JSON).");

    // listings
    m.def("format_listing", [](const std::vector<std::pair<int, std::string>>& items) {
        ListingRecord r;
        for (const auto& [id, d] : items) r.items.push_back({id, d});
        validate_listing(r);
        return format_listing(r);
    });
    m.def("detect_listing", [](const std::string& text) { return detect_listing(text).has_listing; });
    m.def("parse_listing", [](const std::string& text) {
        const ParsedListing p = parse_listing(text);
        return py::make_tuple(items_to_py(p.items), p.residual);
    });
    m.def("probe_file", [](const std::filesystem::path& p) {
        const ProbeStats s = probe_file(p);
        return py::make_tuple(s.total, s.listing, s.percentage_text());
    });

    // scoring
    m.def(
        "score_listing",
        [](const std::string& pred_text, const std::vector<std::pair<int, std::string>>& gold, bool substring_match,
           const std::map<std::string, std::string>& synonyms) {
            ListingRecord g;
            for (const auto& [id, d] : gold) g.items.push_back({id, d});
            MatchPolicy policy;
            policy.substring_match = substring_match;
            for (const auto& [k, v] : synonyms) {
                policy.synonyms[normalize(k, policy.normalization)] = normalize(v, policy.normalization);
            }
            const ListingScore s = score_listing(parse_listing(pred_text), g, policy);
            return py::make_tuple(s.n_correct, s.n_total);
        },
        py::arg("pred_text"), py::arg("gold"), py::arg("substring_match") = true,
        py::arg("synonyms") = std::map<std::string, std::string>{}, "Returns (M, N).");
    m.def("aggregate_scores", [](const std::vector<std::pair<std::int64_t, std::int64_t>>& mn) {
        std::vector<ListingScore> scores;
        for (const auto& [c, t] : mn) scores.push_back({t, c});
        const AggregateScore a = aggregate_scores(scores);
        return py::make_tuple(a.exact, a.text);
    });
    m.def("score_file", [](const std::filesystem::path& pred, const std::filesystem::path& gold) {
        return report_to_json(score_file(pred, gold, MatchPolicy{}));
    });

    // generation
    m.def("listing_templates", [] {
        std::vector<std::pair<int, std::string>> out;
        for (const auto& t : listing_templates()) out.emplace_back(t.id, t.text);
        return out;
    });
    m.def("sample_template", [](std::uint64_t seed) {
        const auto& t = sample_template(listing_templates(), seed);
        return py::make_tuple(t.id, t.text);
    });

    // datasets
    m.def("mix", [](const std::filesystem::path& recipe, const std::filesystem::path& out) {
        return manifest_to_json(mix_to_file(load_recipe(recipe), out));
    });
    m.def("dataset_stats", [](const std::filesystem::path& p) {
        const DatasetStats s = dataset_stats(p);
        py::dict d;
        d["records"] = s.records;
        d["turns"] = s.turns;
        d["images"] = s.images;
        d["listing_turns"] = s.listing_turns;
        return d;
    });

    // pipeline
    m.def(
        "run_tag",
        [](const std::filesystem::path& annotations, const std::filesystem::path& images,
           const std::filesystem::path& out, int level, int jobs) {
            PipelineConfig c;
            c.annotations = annotations;
            c.images = images;
            c.output_dir = out;
            c.level = level;
            c.jobs = jobs;
            std::ostringstream log;
            return run_command(cmd_tag(c, log), log);
        },
        py::arg("annotations"), py::arg("images"), py::arg("out"), py::arg("level") = 2, py::arg("jobs") = 1);
    m.def(
        "run_gen_listing",
        [](const std::filesystem::path& tagged, const std::filesystem::path& out, const std::string& mode,
           std::uint64_t seed, std::optional<std::filesystem::path> replay) {
            PipelineConfig c;
            c.mode = mode;
            c.seed = seed;
            c.replay = std::move(replay);
            std::ostringstream log;
            return run_command(cmd_gen(c, GenKind::listing, tagged, out, log), log);
        },
        py::arg("tagged"), py::arg("out"), py::arg("mode") = "rule", py::arg("seed") = kDefaultSeed,
        py::arg("replay") = std::nullopt);
}
