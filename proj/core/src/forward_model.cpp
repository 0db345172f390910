#include "bornfast/forward_model.hpp"

#include <string>
#include <vector>

namespace bornfast {

void ForwardModel::check_field(const MaterialField& f) const {
  if (f.size() != field_size()) {
    throw ModelError("field has " + std::to_string(f.size()) + " samples, model grid has " +
                     std::to_string(field_size()));
  }
}

BoundaryData ForwardModel::apply_kj(std::span<const MaterialField> fields) const {
  if (fields.empty()) throw ModelError("apply_kj: at least one field required");
  for (const auto& f : fields) check_field(f);
  counter_.fetch_add(fields.size());
  return do_apply_kj(fields);
}

linalg::DenseMatrix ForwardModel::k2_first_slot_matrix(const MaterialField& second) const {
  check_field(second);
  counter_.fetch_add(2);
  return do_k2_first_slot_matrix(second);
}

linalg::DenseMatrix ForwardModel::do_k2_first_slot_matrix(const MaterialField& second) const {
  const std::size_t n = field_size();
  linalg::DenseMatrix out(data_size(), n);
  std::vector<MaterialField> args{MaterialField(n), second};
  for (std::size_t j = 0; j < n; ++j) {
    args[0].values.assign(n, 0.0);
    args[0].values[j] = 1.0;
    const BoundaryData col = do_apply_kj(args);
    for (std::size_t i = 0; i < col.size(); ++i) out(i, j) = col.values[i];
  }
  return out;
}

}  // namespace bornfast
