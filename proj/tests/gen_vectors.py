#!/usr/bin/env python3
"""Regenerates oracle_vectors.hpp.

Reference values come from torch/torchvision (f64) and hand-rolled numpy,
so the C++ tests compare against an independent implementation. Run from
the tests/ directory:  python3 gen_vectors.py > oracle_vectors.hpp
"""

import numpy as np
import torch
import torch.nn.functional as F
import torchvision.ops as ops

torch.set_default_dtype(torch.float64)


def fmt(name, arr):
    flat = np.asarray(arr, dtype=np.float64).reshape(-1)
    vals = ", ".join(repr(float(v)) for v in flat)
    return f"inline constexpr double {name}[] = {{{vals}}};"


out = []
out.append("// Generated by gen_vectors.py. Do not edit by hand.")
out.append("#pragma once")
out.append("")
out.append("namespace oracle {")

rs = np.random.RandomState(42)

# conv2d: x [1,2,4,5], w [3,2,3,3], b [3]
x = rs.uniform(-1, 1, size=(1, 2, 4, 5))
w = rs.uniform(-1, 1, size=(3, 2, 3, 3))
b = rs.uniform(-1, 1, size=(3,))
xt, wt, bt = map(torch.from_numpy, (x, w, b))
y_s1p1 = F.conv2d(xt, wt, bt, stride=1, padding=1)
y_s2p0 = F.conv2d(xt, wt, bt, stride=2, padding=0)
out.append(fmt("conv_x", x))
out.append(fmt("conv_w", w))
out.append(fmt("conv_b", b))
out.append(fmt("conv_y_s1p1", y_s1p1.numpy()))  # [1,3,4,5]
out.append(fmt("conv_y_s2p0", y_s2p0.numpy()))  # [1,3,1,2]

# deformable conv with constant per-tap offsets (offset branch with zero
# weights and this bias produces exactly this offset map)
off_bias = rs.uniform(-0.6, 0.6, size=(18,))
offsets = torch.from_numpy(np.tile(off_bias.reshape(1, 18, 1, 1), (1, 1, 4, 5)))
y_deform = ops.deform_conv2d(xt, offsets, wt, bt, stride=(1, 1), padding=(1, 1))
out.append(fmt("deform_off_bias", off_bias))
out.append(fmt("deform_y", y_deform.numpy()))  # [1,3,4,5]

# SE block: x [2,3,2,2], fc1 [2,3], fc2 [3,2]
se_x = rs.uniform(-1, 1, size=(2, 3, 2, 2))
fc1_w = rs.uniform(-1, 1, size=(2, 3))
fc1_b = rs.uniform(-0.5, 0.5, size=(2,))
fc2_w = rs.uniform(-1, 1, size=(3, 2))
fc2_b = rs.uniform(-0.5, 0.5, size=(3,))
z = se_x.mean(axis=(2, 3))                      # [2,3]
h = np.maximum(z @ fc1_w.T + fc1_b, 0.0)        # [2,2]
s = 1.0 / (1.0 + np.exp(-(h @ fc2_w.T + fc2_b)))  # [2,3]
se_y = se_x * s[:, :, None, None]
out.append(fmt("se_x", se_x))
out.append(fmt("se_fc1_w", fc1_w))
out.append(fmt("se_fc1_b", fc1_b))
out.append(fmt("se_fc2_w", fc2_w))
out.append(fmt("se_fc2_b", fc2_b))
out.append(fmt("se_s", s))
out.append(fmt("se_y", se_y))

# bilinear upsample x2, align_corners=False
up_x = rs.uniform(-1, 1, size=(1, 2, 3, 4))
up_y = F.interpolate(torch.from_numpy(up_x), scale_factor=2, mode="bilinear", align_corners=False)
out.append(fmt("up_x", up_x))
out.append(fmt("up_y", up_y.numpy()))  # [1,2,6,8]

# losses on p,y [1,1,3,3]
p = rs.uniform(0.05, 0.95, size=(1, 1, 3, 3))
y = rs.randint(0, 2, size=(1, 1, 3, 3)).astype(np.float64)
pt = torch.from_numpy(p).clone().requires_grad_(True)
yt = torch.from_numpy(y)

bce_sum = F.binary_cross_entropy(pt, yt, reduction="sum")
bce_sum.backward()
bce_grad = pt.grad.clone().numpy()
bce_mean = F.binary_cross_entropy(torch.from_numpy(p), yt, reduction="mean")

pt2 = torch.from_numpy(p).clone().requires_grad_(True)
logits = torch.log(pt2 / (1.0 - pt2))
focal_sum = ops.sigmoid_focal_loss(logits, yt, alpha=0.25, gamma=2.0, reduction="sum")
focal_sum.backward()
focal_grad = pt2.grad.clone().numpy()

def dice_val(alpha):
    num = 2.0 * np.sum(alpha * p * y) + 1.0
    den = np.sum(alpha * p) + np.sum(alpha * y) + 1.0
    return 1.0 - num / den

dice_absdiff = dice_val(np.abs(p - y))
dice_focal_g2 = dice_val((1.0 - p) ** 2)

out.append(fmt("loss_p", p))
out.append(fmt("loss_y", y))
out.append(fmt("loss_bce_sum", [float(bce_sum)]))
out.append(fmt("loss_bce_mean", [float(bce_mean)]))
out.append(fmt("loss_bce_grad_sum", bce_grad))
out.append(fmt("loss_focal_sum_a25_g2", [float(focal_sum)]))
out.append(fmt("loss_focal_grad_sum_a25_g2", focal_grad))
out.append(fmt("loss_dice_absdiff_eps1", [dice_absdiff]))
out.append(fmt("loss_dice_focal_g2_eps1", [dice_focal_g2]))

# Adam: 4 params, constant grads, lr 1e-3, three steps
theta0 = np.array([1.0, -2.0, 0.5, 3.0])
g = np.array([0.5, -1.0, 2.0, 0.25])
param = torch.from_numpy(theta0.copy()).requires_grad_(True)
opt = torch.optim.Adam([param], lr=1e-3, betas=(0.9, 0.999), eps=1e-8)
snaps = []
for step in range(3):
    opt.zero_grad()
    param.grad = torch.from_numpy(g.copy())
    opt.step()
    snaps.append(param.detach().clone().numpy())
out.append(fmt("adam_theta0", theta0))
out.append(fmt("adam_g", g))
out.append(fmt("adam_after1", snaps[0]))
out.append(fmt("adam_after3", snaps[2]))

out.append("}  // namespace oracle")
print("\n".join(out))
