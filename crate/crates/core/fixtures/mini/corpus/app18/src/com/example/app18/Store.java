package com.example.app18;

public class Store {
    private String name = "item 118";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 118);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
