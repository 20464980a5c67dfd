"""Torch realization of the cell-count model family plus a tiny trainer.

The layer plan mirrors the client's parameter-count contract: a fixed conv
base with batch norm and one pool, then per conv cell a conv + batch norm +
pool (while the spatial side is at least 2) + dropout, then a dense head.
Convolutions pad to preserve spatial size; only pooling halves it.

Training runs on a synthetic colorset: each of the 10 classes is a fixed
RGB color with a little noise on top.  It exists to prove the pipeline
learns, not to benchmark anything.
"""

import torch
from torch import nn

INPUT_SIDE = 32
INPUT_CHANNELS = 3
N_CLASSES = 10

# The class palette is fixed independently of the data seed so that train
# and validation splits label colors identically.
_PALETTE_SEED = 977


def pooling_plan(start_side: int, n_cells: int) -> list[bool]:
    side, plan = start_side, []
    for _ in range(n_cells):
        pool = side >= 2
        plan.append(pool)
        if pool:
            side //= 2
    return plan


def build_model(conv_cells: int, dense_cells: int, train_config: dict) -> nn.Sequential:
    kernel = int(train_config["kernel"])
    base = int(train_config["base_filters"])
    cell = int(train_config["cell_filters"])
    dense_units = int(train_config["dense_units"])
    pad = kernel // 2

    layers: list[nn.Module] = [
        nn.Conv2d(INPUT_CHANNELS, base, kernel, padding=pad),
        nn.BatchNorm2d(base),
        nn.ReLU(),
        nn.MaxPool2d(2),
    ]
    side = INPUT_SIDE // 2
    channels = base
    for pool in pooling_plan(side, conv_cells):
        layers += [nn.Conv2d(channels, cell, kernel, padding=pad), nn.BatchNorm2d(cell), nn.ReLU()]
        channels = cell
        if pool:
            layers.append(nn.MaxPool2d(2))
            side //= 2
        layers.append(nn.Dropout(float(train_config["dropout_cell"])))

    layers.append(nn.Flatten())
    features = channels * side * side
    for _ in range(dense_cells):
        layers += [nn.Linear(features, dense_units), nn.ReLU()]
        features = dense_units
    layers += [nn.Dropout(float(train_config["dropout_head"])), nn.Linear(features, N_CLASSES)]
    return nn.Sequential(*layers)


def parameter_count(model: nn.Module) -> int:
    """Parameters plus batch-norm running statistics.

    The client counts batch norm as four values per channel (weight, bias,
    running mean, running variance), so buffers count too, except the
    bookkeeping step counter.
    """
    total = sum(p.numel() for p in model.parameters())
    total += sum(
        b.numel()
        for name, b in model.named_buffers()
        if not name.endswith("num_batches_tracked")
    )
    return total


def color_dataset(n: int, seed: int) -> tuple[torch.Tensor, torch.Tensor]:
    palette = torch.rand(
        N_CLASSES, INPUT_CHANNELS, generator=torch.Generator().manual_seed(_PALETTE_SEED)
    )
    g = torch.Generator().manual_seed(seed)
    labels = torch.randint(0, N_CLASSES, (n,), generator=g)
    images = (
        palette[labels]
        .reshape(n, INPUT_CHANNELS, 1, 1)
        .expand(n, INPUT_CHANNELS, INPUT_SIDE, INPUT_SIDE)
        .clone()
    )
    images += 0.05 * torch.randn(images.shape, generator=g)
    return images, labels


def make_optimizer(model: nn.Module, train_config: dict) -> torch.optim.Optimizer:
    name = str(train_config["optimizer"]).lower()
    lr = float(train_config["learning_rate"])
    weight_decay = float(train_config.get("l2", 0.0))
    table = {
        "adamax": torch.optim.Adamax,
        "adam": torch.optim.Adam,
        "sgd": torch.optim.SGD,
    }
    if name not in table:
        raise ValueError(f"unsupported optimizer {name!r}")
    return table[name](model.parameters(), lr=lr, weight_decay=weight_decay)


def train_and_score(
    conv_cells: int,
    dense_cells: int,
    epochs: int,
    seed: int,
    train_config: dict,
    n_train: int = 512,
    n_val: int = 256,
    batch_size: int = 64,
) -> tuple[nn.Module, float]:
    """Train on the colorset for the given epochs; returns (model, accuracy).

    Zero epochs skips training and scores the untrained model, which is the
    fast path for parameter-count checks.
    """
    torch.manual_seed(seed)
    model = build_model(conv_cells, dense_cells, train_config)
    if epochs > 0:
        images, labels = color_dataset(n_train, seed * 2 + 1)
        optimizer = make_optimizer(model, train_config)
        loss_fn = nn.CrossEntropyLoss()
        model.train()
        for _ in range(epochs):
            order = torch.randperm(n_train)
            for start in range(0, n_train, batch_size):
                batch = order[start : start + batch_size]
                optimizer.zero_grad()
                loss = loss_fn(model(images[batch]), labels[batch])
                loss.backward()
                optimizer.step()
    val_images, val_labels = color_dataset(n_val, seed * 2 + 2)
    model.eval()
    with torch.no_grad():
        predictions = model(val_images).argmax(dim=1)
        accuracy = (predictions == val_labels).float().mean().item()
    return model, accuracy
